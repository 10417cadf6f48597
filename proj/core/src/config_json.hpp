// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "json_io.hpp"
#include "mtgp/pretrain.hpp"

namespace mtgp::detail {

Json pretrain_config_json(const PretrainConfig& config);
/// Overwrites the fields present in `j`; other keys are ignored.
void read_pretrain_fields(const Json& j, PretrainConfig& config, const std::string& where);
bool is_pretrain_key(const std::string& key);

Json encoder_weights_json(const EncoderWeights& w);
EncoderWeights encoder_weights_from_json(const Json& j, const std::string& where);

}  // namespace mtgp::detail
