#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace headtrack {

using Assignment = std::vector<std::pair<std::size_t, std::size_t>>;

// Minimum-cost matching of cardinality min(rows, cols) on a finite cost
// matrix (shortest augmenting path with dual potentials, O(n^2 m)). Pairs are
// returned sorted by row. Among equal-cost alternatives the search prefers
// the lowest column index, rows being inserted in increasing order.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

double assignment_cost(const Eigen::MatrixXd& cost, const Assignment& assignment);

}  // namespace headtrack
