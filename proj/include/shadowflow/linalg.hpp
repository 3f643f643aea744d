#pragma once

#include <Eigen/Dense>

namespace shadowflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace shadowflow
