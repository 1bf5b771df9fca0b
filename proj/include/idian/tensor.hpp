#pragma once

#include <Eigen/Dense>

namespace idian {

/// Batched values: rows are batch items, columns are features.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(const Tensor& t) { return t.allFinite(); }

} // namespace idian
