// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference audit of every differentiable primitive and of the
// end-to-end pre-training and prompt losses on small random instances.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mtgp {

struct AuditEntry {
    std::string name;
    std::size_t trials = 0;
    double max_rel_error = 0.0;
    bool passed = false;
};

std::vector<AuditEntry> gradient_audit(std::size_t trials = 20, std::uint64_t seed = 0, double tolerance = 1e-5);

}  // namespace mtgp
