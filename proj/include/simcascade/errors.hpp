// SPDX-License-Identifier: Apache-2.0
//
// simcascade: multi-port S-parameter simulator for stacked active metasurfaces
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simcascade {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument: bad dimensions, non-finite inputs, inconsistent sizes.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Layer, cell or port index out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Singular or ill-conditioned systems, non-finite intermediate results.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Quantity undefined for the given input (zero output matrix, zero channel).
class DegenerateError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ParseError : public Error {
public:
    /// `line` is 1-based; 0 when the parser reports no position.
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Structured input violates its schema; `field()` names the offending entry.
class SchemaError : public Error {
public:
    SchemaError(const std::string& field, const std::string& what)
        : Error(field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace simcascade
