#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dlr/beliefs.hpp"
#include "dlr/model.hpp"

namespace dlr {

// The DLR hierarchy. Bp is the message form (Eq.-26 style); BpDlr iterates
// the level-2 reduced DLR update directly. Their fixed points coincide.
enum class Algorithm { Fn, Fn2, Cp, Mf, Mf2, Bp, BpDlr };

enum class Schedule { Parallel, Sequential };
enum class InitKind { Uniform, RandomSeeded };

// How the neighborhood distribution B(x_{N(R)}) is constructed from beliefs.
enum class NeighborhoodForm { Product, Bethe };

struct RunConfig {
    double tolerance = 1e-6;
    long max_iterations = 1000000;
    Schedule schedule = Schedule::Parallel;
    double damping = 0.0;  // in [0,1): new = (1-d)*step + d*old
    double clamp_epsilon = 1e-12;
    bool record_wskl = false;
    InitKind init = InitKind::Uniform;
    std::uint64_t init_seed = 0;
};

struct RunReport {
    long iterations = 0;
    bool converged = false;
    double final_residual = 0.0;
    std::vector<double> residual_trace;  // max-abs belief change per iteration
    std::vector<double> wskl_trace;      // filled when record_wskl
    double oscillation_amplitude = 0.0;  // max-min of residual over last 100 iters
    long clamp_events = 0;
};

struct WsklWeights {
    std::vector<double> alpha_singleton;
    std::vector<double> alpha_pair;

    // alpha = 1 on singletons, 0 on pairs.
    static WsklWeights singleton_default(const PairwiseModel& model);
};

BeliefLevel algorithm_level(Algorithm alg);
const char* algorithm_name(Algorithm alg);
Algorithm algorithm_from_name(const std::string& name);

// --- single-step update operators (pure, parallel schedule) ---

BeliefSet fn_step(const PairwiseModel& model, const BeliefSet& beliefs);
BeliefSet fn2_step(const PairwiseModel& model, const BeliefSet& beliefs);
BeliefSet cp_step(const PairwiseModel& model, const BeliefSet& beliefs,
                  double clamp = 1e-12);
BeliefSet mf_step(const PairwiseModel& model, const BeliefSet& beliefs);
// Eq.-14 path: expected log-conditional then softmax. mf_step dispatches to
// the Ising closed form when the model carries Ising parameters; the two
// agree to 1e-12 per step.
BeliefSet mf_step_generic(const PairwiseModel& model, const BeliefSet& beliefs);
BeliefSet mf2_step(const PairwiseModel& model, const BeliefSet& beliefs);
BeliefSet bp_dlr_step(const PairwiseModel& model, const BeliefSet& beliefs,
                      double clamp = 1e-12);
MessageSet bp_message_step(const PairwiseModel& model, const MessageSet& messages);
BeliefSet beliefs_from_messages(const PairwiseModel& model, const MessageSet& messages);

// The reduced DLR right-hand side sum_{x_N} P(x_R | x_N) mu(x_N). mu is
// row-major over neighborhood() order. Every update operator above routes
// its contraction through the same code path, and sampling's
// ck_marginal_step is this function.
std::vector<double> reduced_dlr_update(const PairwiseModel& model, const Region& region,
                                       const std::vector<double>& neighborhood_table);

// Product table prod_k b_k over the given nodes, row-major.
std::vector<double> product_table(const std::vector<std::vector<double>>& singles,
                                  const std::vector<NodeId>& nodes);

// Bethe joint over region + N(region), Eqs. 7/8 with explicit normalizer.
// Variables are ordered [region nodes..., neighborhood() nodes...]. Singleton
// entries below `clamp` are raised to clamp before dividing; each such event
// bumps *clamp_events. z_out receives the normalizer computed before dividing.
std::vector<double> bethe_embedding(const PairwiseModel& model, const BeliefSet& beliefs,
                                    const Region& region, double clamp = 1e-12,
                                    double* z_out = nullptr, long* clamp_events = nullptr);

// --- fixed-point driver ---

std::pair<BeliefSet, RunReport> run_to_convergence(Algorithm alg, const PairwiseModel& model,
                                                   const RunConfig& config = {});

// As run_to_convergence but starting from the given beliefs (level must
// match the algorithm). Not available for Bp, whose state is a message set.
std::pair<BeliefSet, RunReport> run_from(Algorithm alg, const PairwiseModel& model,
                                         const BeliefSet& initial, const RunConfig& config = {});

std::tuple<MessageSet, BeliefSet, RunReport> run_bp_to_convergence(const PairwiseModel& model,
                                                                   const RunConfig& config = {});

// Post-processor for oscillating runs: iterates `window` further steps from
// `start` and returns the entrywise average (renormalized).
BeliefSet tail_averaged_beliefs(Algorithm alg, const PairwiseModel& model,
                                const BeliefSet& start, const RunConfig& config, int window);

// --- diagnostics ---

// Max over represented regions and states of |b_R - sum P(x_R|x_N) B(x_N)|,
// with B built per `form` (Product for the FN family, Bethe for CP/BP).
double dlr_residual(const PairwiseModel& model, const BeliefSet& beliefs, NeighborhoodForm form,
                    double clamp = 1e-12);

// Weighted KL divergence between beliefs and their one-step image under
// `alg`. For Fn/Fn2/Cp/BpDlr the image is the reduced-DLR right-hand side,
// i.e. this is exactly the WSKL objective; for Mf/Mf2 the image is their own
// update, so the diagnostic still vanishes exactly at fixed points.
double wskl(const PairwiseModel& model, const BeliefSet& beliefs, const WsklWeights& weights,
            Algorithm alg, double clamp = 1e-12);

// Bethe free energy of locally consistent level-2 beliefs (Lagrange terms
// dropped; consistency is a precondition, checked to `consistency_tol`).
double bethe_free_energy(const PairwiseModel& model, const BeliefSet& beliefs,
                         double consistency_tol = 1e-6);

// Max/min ratio minus 1 of [prod b_ij / prod b_i^(deg-1)] / P(x) over all
// configurations; zero iff the beliefs reparameterize the joint.
double reparameterization_spread(const PairwiseModel& model, const BeliefSet& beliefs,
                                 double clamp = 1e-12);

}  // namespace dlr
