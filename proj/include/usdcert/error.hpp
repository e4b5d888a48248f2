// Copyright 2026 The usdcert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef USDCERT_ERROR_HPP
#define USDCERT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace usdcert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (wrong dimension, bad range, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A function was evaluated outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Every restart of the fiducial search ended above the requested tolerance.
class SearchFailed : public Error {
 public:
  SearchFailed(int dim, double best_excess)
      : Error("SIC fiducial search failed in dimension " + std::to_string(dim) +
              "; best frame-potential excess " + std::to_string(best_excess)),
        dim_(dim),
        best_excess_(best_excess) {}

  int dim() const noexcept { return dim_; }
  double best_excess() const noexcept { return best_excess_; }

 private:
  int dim_;
  double best_excess_;
};

/// Too few events to form a meaningful estimate.
class InsufficientStatistics : public Error {
 public:
  using Error::Error;
};

/// A wire peer sent something that does not follow the message protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A remote device did not answer in time or dropped its connection.
class DeviceUnavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace usdcert

#endif  // USDCERT_ERROR_HPP
