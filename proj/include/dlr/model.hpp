#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dlr/topology.hpp"

namespace dlr {

// Ising parameterization over states {0,1}: weight exp(sum theta_ij x_i x_j
// + sum phi_i x_i).
struct IsingParams {
    Topology topology;
    std::vector<double> theta;  // per edge, topology edge order
    std::vector<double> phi;    // per node
};

// Pairwise discrete MRF with nonnegative potential tables. Edge tables are
// row-major over (x_first, x_second) in the topology's edge orientation.
// Immutable after construction; safe to share across threads.
struct PairwiseModel {
    Topology topology;
    std::vector<int> cardinalities;
    std::vector<std::vector<double>> unary;
    std::vector<std::vector<double>> pairwise;
    std::optional<IsingParams> ising;  // set when built from IsingParams

    int node_count() const { return topology.node_count; }
    int edge_count() const { return topology.edge_count(); }
    int card(NodeId i) const { return cardinalities[i]; }
    bool is_binary() const;
};

// Singleton {i} or pair {i,j}; a pair must be an edge of the model.
struct Region {
    NodeId a = -1;
    NodeId b = -1;  // -1 for singletons

    static Region node(NodeId i) { return {i, -1}; }
    static Region edge(NodeId i, NodeId j) { return {i, j}; }
    bool is_edge() const { return b >= 0; }
    int size() const { return is_edge() ? 2 : 1; }
};

struct InstanceConfig {
    int rows = 4;
    int cols = 4;
    double var_theta = 0.1;
    double var_phi = 0.1;
    std::uint64_t seed = 0;
};

// Throws on any invariant violation (shape mismatch, negative entries,
// all-zero unary or edge tables); message names the offending location.
void validate_model(const PairwiseModel& model);

// Uniform potentials (all ones), all nodes binary unless card given.
PairwiseModel uniform_model(const Topology& topology, int card = 2);

PairwiseModel build_ising(const IsingParams& params);

// Markov blanket of a region: union of the region nodes' adjacencies minus
// the region itself; sorted, duplicate-free.
std::vector<NodeId> neighborhood(const Topology& topology, const Region& region);

// P(x_R | x_{N(R)}) as a row-major table over the region states. `boundary`
// lists one state per neighborhood node, in neighborhood() order. Computed
// from the potentials touching the region only, in the log domain with max
// subtraction.
std::vector<double> local_conditional(const PairwiseModel& model, const Region& region,
                                      const std::vector<int>& boundary);

// The field offset -1/2 sum_{j in N(i)} theta_ij that centers singleton
// marginals: with phi = shift alone the model is invariant under the global
// flip x -> 1-x, so every exact marginal is exactly 1/2.
std::vector<double> centering_shift(const Topology& topology, const std::vector<double>& theta);

// theta_ij ~ N(0, var_theta), phi_i = g_i + centering_shift_i with
// g_i ~ N(0, var_phi). Draw order: all edge couplings in topology edge
// order, then all node fields; see Rng for the Gaussian transform.
IsingParams random_ising_instance(const InstanceConfig& cfg);

}  // namespace dlr
