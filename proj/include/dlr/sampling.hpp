#pragma once

#include <cstdint>
#include <vector>

#include "dlr/beliefs.hpp"
#include "dlr/model.hpp"
#include "dlr/rng.hpp"

namespace dlr {

using Configuration = std::vector<int>;

// Dense single-site Gibbs kernel over the full configuration space.
// rows = source configuration x', columns = target x; an entry is zero
// unless x and x' agree off the site.
struct KernelMatrix {
    NodeId site = -1;
    std::size_t dim = 0;
    std::vector<double> matrix;  // row-major, dim x dim

    double at(std::size_t from, std::size_t to) const { return matrix[from * dim + to]; }
};

struct ChainConfig {
    long sweeps = 100000;
    long burn_in = -1;  // negative: 10% of sweeps
    int chains = 8;
    std::uint64_t seed = 0;
    bool random_sweep_order = false;  // fixed raster order by default
    bool track_pairwise = false;
};

struct GibbsEstimate {
    BeliefSet beliefs;                              // empirical frequencies
    std::vector<std::vector<double>> standard_error;  // per node, per state
    long samples_per_chain = 0;
};

// Resamples `site` from its local conditional given the current neighbor
// states; every other coordinate is untouched. Shares local_conditional with
// the inference updates.
Configuration gibbs_site_update(const PairwiseModel& model, const Configuration& config,
                                NodeId site, Rng& rng);

// Explicit kernel; total state space capped at 2^14.
KernelMatrix explicit_kernel(const PairwiseModel& model, NodeId site);

// max over configuration pairs of |K(x|x')P(x') - K(x'|x)P(x)|.
double detailed_balance_violation(const KernelMatrix& kernel, const PairwiseModel& model);

// One Chapman-Kolmogorov marginal step: sum_{x_N} P(x_R | x_N) mu(x_N).
// Identical code path to the inference update kernels.
std::vector<double> ck_marginal_step(const PairwiseModel& model, const Region& region,
                                     const std::vector<double>& neighborhood_table);

// Empirical marginals pooled over independent chains (seed derived per
// chain), with between-chain standard errors.
GibbsEstimate gibbs_estimate(const PairwiseModel& model, const ChainConfig& config);

}  // namespace dlr
