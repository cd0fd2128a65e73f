// Copyright 2026 The sanlm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace sanlm {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid argument values (probabilities, weights, sizes).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Malformed or missing input data (files, records, empty corpora).
class DataError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public DataError {
 public:
  using DataError::DataError;
};

class SequenceTooLongError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class CheckpointTruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

class CheckpointChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

// Checkpoint does not belong to the supplied vocabulary or configuration.
class CheckpointMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

}  // namespace sanlm
