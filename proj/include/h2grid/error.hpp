#pragma once

#include <stdexcept>
#include <string>

namespace h2grid {

enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  parse = 3,
  validation = 4,
  infeasible = 5,
  solver = 6,
  partial = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace h2grid
