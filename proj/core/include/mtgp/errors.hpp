// Copyright (c) 2026, The mtgp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mtgp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A value is outside the domain of an operation (log of non-positive, zero-norm cosine, NaN).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A file or JSON document could not be parsed into the expected structure.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Parsed input violates a semantic invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A node, class or instance id is out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// A persisted artifact is from an incompatible format version or dataset.
class CompatibilityError : public Error {
public:
    using Error::Error;
};

}  // namespace mtgp
