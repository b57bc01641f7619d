#include "dlr/phase.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "dlr/error.hpp"

namespace dlr {

namespace {

constexpr double kSpin[2] = {-1.0, 1.0};

double pair_mag(const std::vector<double>& b) {
    return (b[2] + b[3]) - (b[0] + b[1]);  // row-major (s_i, s_j)
}

void renormalize(std::vector<double>& b) {
    double s = b[0] + b[1] + b[2] + b[3];
    for (double& v : b) v /= s;
}

double fn_map(double m, double t) {
    double out = 0.0;
    for (int cfg = 0; cfg < 16; ++cfg) {
        double w = 1.0;
        int sum = 0;
        for (int k = 0; k < 4; ++k) {
            int s = (cfg >> k) & 1;
            w *= (1.0 + m * kSpin[s]) / 2.0;
            sum += s;
        }
        out += w * std::tanh((2.0 * sum - 4.0) / t);
    }
    return out;
}

double bp_map(double m, double t) {
    double clipped = std::min(std::max(m, -1.0 + 1e-15), 1.0 - 1e-15);
    double w = std::atanh(clipped) / 4.0;  // cavity message field (in beta units)
    double wp = std::atanh(std::tanh(1.0 / t) * std::tanh(3.0 * w));
    return std::tanh(4.0 * wp);
}

double mf2_map(double bt, double t) {
    // {0,1} convention: theta = 4/t, phi = -8/t; all four incident pairs of a
    // node are identical, so the |N(i)| average is a single pair marginal.
    double theta = 4.0 / t;
    double h = -8.0 / t + 3.0 * theta * bt;
    double e01 = std::exp(h), e10 = std::exp(h), e11 = std::exp(2.0 * h + theta);
    return (e10 + e11) / (1.0 + e01 + e10 + e11);
}

// Conditional of the edge (s_i, s_j) given boundary spin sums a (side of i)
// and b (side of j).
std::array<double, 4> edge_conditional(int a, int b, double t) {
    std::array<double, 4> tab;
    double z = 0.0;
    for (int si = 0; si < 2; ++si)
        for (int sj = 0; sj < 2; ++sj) {
            double e = std::exp((kSpin[si] * kSpin[sj] + a * kSpin[si] + b * kSpin[sj]) / t);
            tab[si * 2 + sj] = e;
            z += e;
        }
    for (double& v : tab) v /= z;
    return tab;
}

std::vector<double> fn2_map(const std::vector<double>& b, double t) {
    double marg[2] = {b[0] + b[1], b[2] + b[3]};
    std::vector<double> out(4, 0.0);
    for (int cfg = 0; cfg < 64; ++cfg) {
        double w = 1.0;
        int a = 0, bb = 0;
        for (int k = 0; k < 6; ++k) {
            int s = (cfg >> k) & 1;
            w *= marg[s];
            (k < 3 ? a : bb) += static_cast<int>(kSpin[s]);
        }
        auto cond = edge_conditional(a, bb, t);
        for (int s = 0; s < 4; ++s) out[s] += w * cond[s];
    }
    renormalize(out);
    return out;
}

std::vector<double> cp_map(const std::vector<double>& b, double t) {
    double marg[2] = {b[0] + b[1], b[2] + b[3]};
    // Bethe boundary distribution over the 2^6 edge-star boundary
    std::array<double, 64> B{};
    double z = 0.0;
    for (int cfg = 0; cfg < 64; ++cfg) {
        double acc = 0.0;
        for (int si = 0; si < 2; ++si)
            for (int sj = 0; sj < 2; ++sj) {
                double v = b[si * 2 + sj];
                for (int k = 0; k < 3; ++k) v *= b[si * 2 + ((cfg >> k) & 1)] / marg[si];
                for (int k = 3; k < 6; ++k) v *= b[sj * 2 + ((cfg >> k) & 1)] / marg[sj];
                acc += v;
            }
        B[cfg] = acc;
        z += acc;
    }
    std::vector<double> out(4, 0.0);
    for (int cfg = 0; cfg < 64; ++cfg) {
        double w = B[cfg] / z;
        int a = 0, bb = 0;
        for (int k = 0; k < 6; ++k) (k < 3 ? a : bb) += static_cast<int>(kSpin[(cfg >> k) & 1]);
        auto cond = edge_conditional(a, bb, t);
        for (int s = 0; s < 4; ++s) out[s] += w * cond[s];
    }
    renormalize(out);
    return out;
}

bool pair_based(Algorithm alg) { return alg == Algorithm::Fn2 || alg == Algorithm::Cp; }

void check_alg(Algorithm alg) {
    switch (alg) {
        case Algorithm::Fn:
        case Algorithm::Fn2:
        case Algorithm::Cp:
        case Algorithm::Mf:
        case Algorithm::Mf2:
        case Algorithm::Bp: return;
        default:
            fail(ErrorKind::InvalidParameter,
                 std::string("no homogeneous map for algorithm ") + algorithm_name(alg));
    }
}

}  // namespace

HomogeneousState init_homogeneous(Algorithm alg, double m) {
    check_alg(alg);
    HomogeneousState s;
    s.algorithm = alg;
    s.m = m;
    if (pair_based(alg)) {
        double p = (1.0 + m) / 2.0, q = 1.0 - p;
        s.pair = {q * q, q * p, p * q, p * p};
    }
    return s;
}

HomogeneousState homogeneous_step(Algorithm alg, double t, const HomogeneousState& state) {
    check_alg(alg);
    if (!(t > 0.0)) fail(ErrorKind::InvalidParameter, "temperature must be > 0");
    HomogeneousState out = state;
    out.algorithm = alg;
    switch (alg) {
        case Algorithm::Fn: out.m = fn_map(state.m, t); break;
        case Algorithm::Bp: out.m = bp_map(state.m, t); break;
        case Algorithm::Mf: out.m = std::tanh(4.0 * state.m / t); break;
        case Algorithm::Mf2: out.m = 2.0 * mf2_map((1.0 + state.m) / 2.0, t) - 1.0; break;
        case Algorithm::Fn2:
            out.pair = fn2_map(state.pair, t);
            out.m = pair_mag(out.pair);
            break;
        case Algorithm::Cp:
            out.pair = cp_map(state.pair, t);
            out.m = pair_mag(out.pair);
            break;
        default: break;
    }
    return out;
}

double spontaneous_magnetization(Algorithm alg, double t, const CriticalSearchConfig& cfg) {
    HomogeneousState s = init_homogeneous(alg, cfg.init_m);
    double band_lo = std::numeric_limits<double>::infinity(), band_hi = 0.0;
    double delta = 0.0;
    for (long iter = 0; iter < cfg.max_fp_iterations; ++iter) {
        HomogeneousState next = homogeneous_step(alg, t, s);
        delta = std::fabs(next.m - s.m);
        for (std::size_t k = 0; k < next.pair.size(); ++k)
            delta = std::max(delta, std::fabs(next.pair[k] - s.pair[k]));
        s = next;
        if (delta < 1e-10) return std::fabs(s.m);
        // paramagnetic decay: nothing below can stop at a magnetized point
        if (std::fabs(s.m) < 0.1 * cfg.m_threshold) return std::fabs(s.m);
        if (iter >= cfg.max_fp_iterations - 100) {
            band_lo = std::min(band_lo, s.m);
            band_hi = std::max(band_hi, s.m);
        }
    }
    // Reaching the cap with a still-shrinking step is critical slowing-down,
    // not oscillation; accept the current point.
    if (delta < 1e-6) return std::fabs(s.m);
    fail(ErrorKind::Oscillation,
         "fixed-point iteration did not settle; last band [" + std::to_string(band_lo) + ", " +
             std::to_string(band_hi) + "]");
}

double critical_temperature(Algorithm alg, const CriticalSearchConfig& cfg) {
    if (!(cfg.t_low > 0.0) || !(cfg.t_high > cfg.t_low) || !(cfg.t_tolerance > 0.0) ||
        !(cfg.m_threshold > 0.0))
        fail(ErrorKind::InvalidParameter, "critical_temperature: bad search configuration");
    auto magnetized = [&](double t) { return spontaneous_magnetization(alg, t, cfg) > cfg.m_threshold; };
    if (!magnetized(cfg.t_low) || magnetized(cfg.t_high))
        fail(ErrorKind::BadBracket,
             "bracket does not straddle the transition for " + std::string(algorithm_name(alg)));
    double lo = cfg.t_low, hi = cfg.t_high;
    while (hi - lo > cfg.t_tolerance) {
        double mid = 0.5 * (lo + hi);
        (magnetized(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double reference_critical_temperature(Algorithm alg) {
    switch (alg) {
        case Algorithm::Mf: return 4.0;
        case Algorithm::Mf2: return 3.776;
        case Algorithm::Fn: return 3.089;
        case Algorithm::Fn2: return 3.025;
        case Algorithm::Bp: return 2.885;
        default: return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace dlr
