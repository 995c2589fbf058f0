#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace hicom {

using NodeId = std::int32_t;
using TokenId = std::int32_t;

// Sequences are stored row-major as [position, feature] so a sequence element
// is a contiguous row.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

using NodeList = std::vector<NodeId>;

}  // namespace hicom
