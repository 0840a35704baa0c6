#pragma once

#include <vector>

#include <Eigen/Dense>

namespace recoil::detail {

struct SvdFactors {
  std::vector<double> singular_values;  // descending
  Eigen::MatrixXcd u;                   // m x min(m, n), empty when values only
  Eigen::MatrixXcd vh;                  // min(m, n) x n, empty when values only
};

/// Thin SVD by LAPACK zgesdd. The input is consumed.
SvdFactors svd(Eigen::MatrixXcd&& a, bool vectors);

}  // namespace recoil::detail
