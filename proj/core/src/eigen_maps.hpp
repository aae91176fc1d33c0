#pragma once

#include <Eigen/Dense>

namespace pixtok::detail {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

inline MatMap mat(float* p, Eigen::Index rows, Eigen::Index cols) { return {p, rows, cols}; }
inline ConstMatMap mat(const float* p, Eigen::Index rows, Eigen::Index cols) {
  return {p, rows, cols};
}

}  // namespace pixtok::detail
