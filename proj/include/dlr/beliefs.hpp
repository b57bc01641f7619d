#pragma once

#include <cstdint>
#include <vector>

#include "dlr/model.hpp"

namespace dlr {

// Hierarchy levels: Singleton keeps b_i only, PairOnly keeps b_ij with
// singletons derived by marginalization, Pair keeps both.
enum class BeliefLevel { Singleton, PairOnly, Pair };

struct BeliefSet {
    BeliefLevel level = BeliefLevel::Singleton;
    std::vector<std::vector<double>> node;  // empty at PairOnly
    std::vector<std::vector<double>> edge;  // empty at Singleton

    bool has_nodes() const { return level != BeliefLevel::PairOnly; }
    bool has_edges() const { return level != BeliefLevel::Singleton; }
};

// Directed edge messages m_{i->j}(x_j), strictly positive, normalized to
// sum 1. Index 2*e + 0 runs first->second of topology edge e, 2*e + 1 the
// reverse.
struct MessageSet {
    std::vector<std::vector<double>> table;
};

BeliefSet init_beliefs(const PairwiseModel& model, BeliefLevel level);
MessageSet init_messages(const PairwiseModel& model);

// Random positive tables (normalized); for basin exploration.
BeliefSet random_beliefs(const PairwiseModel& model, BeliefLevel level, std::uint64_t seed);
MessageSet random_messages(const PairwiseModel& model, std::uint64_t seed);

// Singleton tables of any level. For PairOnly these are the marginalization
// averages b_i = (1/|N(i)|) sum_{j in N(i)} sum_{x_j} b_ij(x_i, x_j).
std::vector<std::vector<double>> derived_singletons(const PairwiseModel& model,
                                                    const BeliefSet& beliefs);

// Shape and normalization checks; throws on violation.
void validate_beliefs(const PairwiseModel& model, const BeliefSet& beliefs, double tol = 1e-9);

// In-place x /= sum(x); throws on nonpositive sum.
void normalize(std::vector<double>& table);

// Max row/column-sum mismatch between edge tables and singleton tables
// (the m-constraint violation); requires level Pair.
double local_consistency_gap(const PairwiseModel& model, const BeliefSet& beliefs);

// Mean over nodes of sum_x |b_i(x) - reference_i(x)|.
double l1_singleton_error(const PairwiseModel& model, const BeliefSet& beliefs,
                          const std::vector<std::vector<double>>& reference);

}  // namespace dlr
