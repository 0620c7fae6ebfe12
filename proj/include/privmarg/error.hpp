// Copyright 2026 The privmarg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace privmarg {

// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// A clique operation was asked for an incompatible clique pair
// (e.g. marginalizing onto a non-subset).
class InvalidCliqueError : public Error {
 public:
  using Error::Error;
};

// A factor expected to be a distribution has a materially negative entry.
class InvalidDistributionError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

// A full-table operation would exceed the configured cell limit.
class TableTooLargeError : public Error {
 public:
  using Error::Error;
};

// A CliqueVector is missing a factor required by the operation.
class IncompleteVectorError : public Error {
 public:
  using Error::Error;
};

class InvalidCountingNumbersError : public Error {
 public:
  using Error::Error;
};

// A measured clique is not contained in any region-graph vertex.
class UnsupportedCliqueError : public Error {
 public:
  using Error::Error;
};

// The estimation loss grew past the divergence guard.
class StepSizeTooLargeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace privmarg
