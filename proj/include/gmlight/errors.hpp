// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gmlight {

// Bad caller input: wrong sizes, out-of-range indices, nonpositive depths.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or truncated file payload. Carries the byte offset at which
// decoding failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Problem size beyond what an operation supports (exact OT oracle).
class UnsupportedScale : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A quantity that is mathematically undefined for the given input, e.g. a
// scale fit against an all-zero map.
class Undefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Iterative solver stopped at its iteration cap.
class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gmlight
