#pragma once

#include <vector>

#include "dlr/model.hpp"

namespace dlr {

// Brute-force ground truth for small models. Everything here enumerates the
// full configuration space, capped at 2^24 states.
struct ExactSummary {
    double log_partition = 0.0;
    std::vector<std::vector<double>> singleton_marginals;  // per node
    std::vector<std::vector<double>> pairwise_marginals;   // per edge, row-major
};

// Unnormalized log-weight log prod psi of one full configuration.
double log_weight(const PairwiseModel& model, const std::vector<int>& config);

// log Z by streaming log-sum-exp over all configurations.
double log_partition(const PairwiseModel& model);

// Exact P(x_i) and P(x_i, x_j); each table normalized, accumulated with
// compensated summation (hard-regime weights span many orders of magnitude).
ExactSummary exact_marginals(const PairwiseModel& model);

double joint_probability(const PairwiseModel& model, const std::vector<int>& config);

// Exact marginal over an arbitrary (small) node subset; row-major over the
// subset's states in the given node order.
std::vector<double> exact_subset_marginal(const PairwiseModel& model,
                                          const std::vector<NodeId>& nodes);

}  // namespace dlr
