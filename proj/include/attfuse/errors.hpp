// attfuse/errors.hpp

// Copyright 2026  attfuse authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ATTFUSE_ERRORS_HPP_
#define ATTFUSE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace attfuse {

// Base for every error raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unusable audio input (empty signal, unreadable or malformed file).
class InvalidAudio : public Error {
 public:
  using Error::Error;
};

// Tensor or matrix dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Vocabulary construction or lookup failure.
class VocabError : public Error {
 public:
  using Error::Error;
};

// Token or table index out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered where a finite value is required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Learning-rate schedule queried outside its domain.
class ScheduleError : public Error {
 public:
  using Error::Error;
};

// Metrics requested on an empty or inconsistent sample set.
class MetricsError : public Error {
 public:
  using Error::Error;
};

// Dataset manifest parse failure; message carries the line number.
class ManifestError : public Error {
 public:
  using Error::Error;
};

// Checkpoint container unreadable or inconsistent with the model config.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace attfuse

#endif  // ATTFUSE_ERRORS_HPP_
