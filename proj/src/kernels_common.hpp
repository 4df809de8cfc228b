#pragma once

#include <string>

#include "aot/matrix.hpp"

namespace aot::kernels::detail {

inline void check_nonempty(const Matrix& m, const char* op) {
  if (m.empty()) throw DimensionError(std::string(op) + ": empty operand");
}

inline void check_inner(std::size_t lhs, std::size_t rhs, const char* op, const Matrix& a,
                        const Matrix& b) {
  check_nonempty(a, op);
  check_nonempty(b, op);
  if (lhs != rhs) {
    throw DimensionError(std::string(op) + ": inner dimensions differ (" + std::to_string(lhs) +
                         " vs " + std::to_string(rhs) + ")");
  }
}

}  // namespace aot::kernels::detail
