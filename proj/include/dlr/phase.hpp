#pragma once

#include <vector>

#include "dlr/inference.hpp"

namespace dlr {

// Homogeneous 2D Ising model, +-1 spins, J = 1, temperature t; every node of
// the infinite degree-4 grid carries the same state. Pair-based algorithms
// (fn2/cp) keep the shared 2x2 edge belief; index 0 <-> spin -1, 1 <-> +1.
struct HomogeneousState {
    Algorithm algorithm = Algorithm::Fn;
    double m = 0.0;            // magnetization
    std::vector<double> pair;  // 4 entries for fn2/cp, empty otherwise
};

struct CriticalSearchConfig {
    double t_low = 1.5;
    double t_high = 5.0;
    double t_tolerance = 1e-3;
    double m_threshold = 1e-4;
    double init_m = 0.9;
    long max_fp_iterations = 100000;
};

// Exact 2D Ising critical temperature (Onsager), reported as a reference
// constant only; none of the approximations attains it.
inline constexpr double kOnsagerTc = 2.269;

HomogeneousState init_homogeneous(Algorithm alg, double m);

// One update of the algorithm's fixed-point map specialized to the
// homogeneous lattice. fn sums over the 2^4 neighbor configurations, bp is
// the 3-message cavity recursion, mf is m <- tanh(4m/t), fn2/cp/mf2 work on
// a single edge with its 6-node boundary.
HomogeneousState homogeneous_step(Algorithm alg, double t, const HomogeneousState& state);

// Fixed point from a biased start (init_m); returns |m|.
double spontaneous_magnetization(Algorithm alg, double t, const CriticalSearchConfig& cfg = {});

// Bisection on the magnetized predicate |m| > m_threshold.
double critical_temperature(Algorithm alg, const CriticalSearchConfig& cfg = {});

// Paper value for the algorithm's critical temperature (nan when the paper
// reports none, e.g. cp).
double reference_critical_temperature(Algorithm alg);

}  // namespace dlr
