// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace seqlayers {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqlayers
