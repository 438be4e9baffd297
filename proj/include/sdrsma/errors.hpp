// SPDX-License-Identifier: Apache-2.0
//
// sdrsma - simultaneous diagonalization precoding and rate optimization
// for downlink MIMO rate-splitting multiple access
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

#ifndef sdrsma_errors_H
#define sdrsma_errors_H

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdrsma
{

// Base class for all errors thrown by this library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Input matrices have incompatible or out-of-contract dimensions.
class DimensionMismatch : public Error
{
  public:
    using Error::Error;
};

// A matrix that must have full (row or column) rank does not, numerically.
// Carries the index of the offending matrix when the operation works on a
// list of matrices; npos otherwise.
class RankDeficiency : public Error
{
  public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    explicit RankDeficiency(const std::string &what, std::size_t index = npos)
        : Error(what), index_(index)
    {
    }

    std::size_t index() const noexcept { return index_; }

  private:
    std::size_t index_;
};

// Invalid configuration values (invariant violations at the config boundary).
class ConfigError : public Error
{
  public:
    using Error::Error;
};

// Requested a system topology the implementation does not support.
class UnsupportedTopology : public Error
{
  public:
    using Error::Error;
};

// A power allocation violates the transmit power budget beyond tolerance.
class ConstraintViolation : public Error
{
  public:
    using Error::Error;
};

// An iterative solver failed to converge within its iteration cap.
class SolverFailure : public Error
{
  public:
    using Error::Error;
};

// User or stream index out of range.
class IndexError : public Error
{
  public:
    using Error::Error;
};

// Argument outside the mathematical domain of an operation (e.g. negative
// powers).
class DomainError : public Error
{
  public:
    using Error::Error;
};

// A dense factorization produced numerically unusable output (e.g. complex
// eigenvalues where real ones are expected, or a singular shared basis).
class NumericalError : public Error
{
  public:
    using Error::Error;
};

} // namespace sdrsma

#endif
