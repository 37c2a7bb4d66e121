// Copyright 2026 The SEAL Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace seal {

// Bad arguments, shapes or ranges supplied by the caller. CLI exit code 1.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed files (CSV rows, JSON documents, checkpoints). CLI exit code 1.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

// Non-finite values, divergence, invalid probability tables. CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seal
