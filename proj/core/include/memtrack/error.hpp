// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace memtrack {

/// Bad user input: malformed config, scenario, or dump file.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A data-structure invariant was found broken at runtime.
class InvariantViolation : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

}  // namespace memtrack
