// Copyright 2026 The dyngrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNGROW_ERRORS_HPP_
#define DYNGROW_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dyngrow {

// Errors raised by the library. Callers that only care about "something went
// wrong" can catch std::runtime_error / std::invalid_argument.

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

class ForbiddenRemovalError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

class StaleActionError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

class DeadlockError : public StructuralError {
 public:
  using StructuralError::StructuralError;
};

// Raised by search policies when a graph admits no action at all.
class TerminalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDatasetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dyngrow

#endif  // DYNGROW_ERRORS_HPP_
