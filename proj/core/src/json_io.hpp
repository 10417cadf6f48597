// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "mtgp/errors.hpp"
#include "mtgp/matrix.hpp"

namespace mtgp::detail {

using Json = nlohmann::json;

inline Json matrix_to_json(const Matrix& m) {
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

/// Parses {"rows", "cols", "data"}; `where` names the field in errors.
inline Matrix matrix_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected a matrix object");
    for (const char* key : {"rows", "cols", "data"}) {
        if (!j.contains(key)) throw ParseError(where + "." + key + ": missing");
    }
    if (!j["rows"].is_number_unsigned() || !j["cols"].is_number_unsigned()) {
        throw ParseError(where + ": rows and cols must be nonnegative integers");
    }
    const auto rows = j["rows"].get<std::size_t>();
    const auto cols = j["cols"].get<std::size_t>();
    const Json& data = j["data"];
    if (!data.is_array() || data.size() != rows * cols) {
        throw ParseError(where + ".data: expected " + std::to_string(rows * cols) + " numbers");
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!data[i].is_number()) throw ParseError(where + ".data[" + std::to_string(i) + "]: not a number");
        m.values()[i] = data[i].get<double>();
    }
    return m;
}

/// Field lookup with a typed error naming the path.
template <class T>
T field(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ParseError(where + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError(where + "." + key + ": wrong type");
    }
}

inline Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

}  // namespace mtgp::detail
