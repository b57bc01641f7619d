#include "dlr/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dlr/error.hpp"
#include "dlr/exact.hpp"
#include "dlr/inference.hpp"
#include "dlr/states.hpp"

namespace dlr {

namespace {

constexpr std::uint64_t kMaxKernelConfigs = 1ull << 14;

void check_config_shape(const PairwiseModel& model, const Configuration& config) {
    if (static_cast<int>(config.size()) != model.node_count())
        fail(ErrorKind::InvalidConfig, "configuration: expected one state per node");
    for (int i = 0; i < model.node_count(); ++i)
        if (config[i] < 0 || config[i] >= model.card(i))
            fail(ErrorKind::InvalidConfig,
                 "configuration[" + std::to_string(i) + "]: state out of range");
}

int sample_from(const std::vector<double>& dist, Rng& rng) {
    double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t s = 0; s < dist.size(); ++s) {
        acc += dist[s];
        if (u <= acc) return static_cast<int>(s);
    }
    return static_cast<int>(dist.size()) - 1;
}

// Per-site conditional lookup table; built once per model through
// local_conditional so sampling and inference share one definition of
// P(x_R | x_N). Falls back to direct evaluation for very large boundaries.
struct SiteSampler {
    std::vector<NodeId> nbrs;
    std::vector<int> cards;
    std::vector<double> table;  // configs * card(site); empty when direct
    bool direct = false;

    SiteSampler() = default;
    SiteSampler(const PairwiseModel& model, NodeId site) {
        nbrs = neighborhood(model.topology, Region::node(site));
        std::uint64_t configs = 1;
        for (NodeId v : nbrs) {
            cards.push_back(model.card(v));
            configs *= static_cast<std::uint64_t>(model.card(v));
        }
        if (configs > 4096) {
            direct = true;
            return;
        }
        table.reserve(configs * model.card(site));
        for (StateIterator it(cards); !it.done(); it.advance()) {
            auto cond = local_conditional(model, Region::node(site), it.state());
            table.insert(table.end(), cond.begin(), cond.end());
        }
    }

    std::vector<double> conditional(const PairwiseModel& model, NodeId site,
                                    const Configuration& x) const {
        std::vector<int> boundary(nbrs.size());
        for (std::size_t k = 0; k < nbrs.size(); ++k) boundary[k] = x[nbrs[k]];
        if (direct) return local_conditional(model, Region::node(site), boundary);
        std::uint64_t c = state_index(cards, boundary);
        const int s = model.card(site);
        return std::vector<double>(table.begin() + c * s, table.begin() + (c + 1) * s);
    }
};

}  // namespace

Configuration gibbs_site_update(const PairwiseModel& model, const Configuration& config,
                                NodeId site, Rng& rng) {
    check_config_shape(model, config);
    if (site < 0 || site >= model.node_count())
        fail(ErrorKind::InvalidRegion, "gibbs_site_update: site out of range");
    auto nbrs = neighborhood(model.topology, Region::node(site));
    std::vector<int> boundary(nbrs.size());
    for (std::size_t k = 0; k < nbrs.size(); ++k) boundary[k] = config[nbrs[k]];
    auto cond = local_conditional(model, Region::node(site), boundary);
    Configuration out = config;
    out[site] = sample_from(cond, rng);
    return out;
}

KernelMatrix explicit_kernel(const PairwiseModel& model, NodeId site) {
    if (site < 0 || site >= model.node_count())
        fail(ErrorKind::InvalidRegion, "explicit_kernel: site out of range");
    std::uint64_t dim = state_space_size(model.cardinalities);
    if (dim > kMaxKernelConfigs)
        fail(ErrorKind::ModelTooLarge, "explicit_kernel: state space exceeds 2^14");

    KernelMatrix k;
    k.site = site;
    k.dim = dim;
    k.matrix.assign(dim * dim, 0.0);

    // stride of the site coordinate in the row-major configuration index
    std::uint64_t stride = 1;
    for (int v = model.node_count() - 1; v > site; --v)
        stride *= static_cast<std::uint64_t>(model.card(v));

    auto nbrs = neighborhood(model.topology, Region::node(site));
    std::vector<int> boundary(nbrs.size());
    std::uint64_t from = 0;
    for (StateIterator it(model.cardinalities); !it.done(); it.advance(), ++from) {
        const auto& x = it.state();
        for (std::size_t j = 0; j < nbrs.size(); ++j) boundary[j] = x[nbrs[j]];
        auto cond = local_conditional(model, Region::node(site), boundary);
        std::uint64_t base = from - static_cast<std::uint64_t>(x[site]) * stride;
        for (int s = 0; s < model.card(site); ++s)
            k.matrix[from * dim + base + static_cast<std::uint64_t>(s) * stride] = cond[s];
    }
    return k;
}

double detailed_balance_violation(const KernelMatrix& kernel, const PairwiseModel& model) {
    std::uint64_t dim = state_space_size(model.cardinalities);
    if (dim != kernel.dim)
        fail(ErrorKind::InvalidConfig, "detailed_balance_violation: kernel/model size mismatch");
    // P over all configurations
    std::vector<double> p(dim);
    {
        std::uint64_t idx = 0;
        double logz = log_partition(model);
        for (StateIterator it(model.cardinalities); !it.done(); it.advance(), ++idx) {
            double lw = log_weight(model, it.state());
            p[idx] = std::isfinite(lw) ? std::exp(lw - logz) : 0.0;
        }
    }
    double worst = 0.0;
    for (std::uint64_t a = 0; a < dim; ++a)
        for (std::uint64_t b = 0; b < dim; ++b)
            worst = std::max(worst, std::fabs(kernel.at(a, b) * p[a] - kernel.at(b, a) * p[b]));
    return worst;
}

std::vector<double> ck_marginal_step(const PairwiseModel& model, const Region& region,
                                     const std::vector<double>& neighborhood_table) {
    return reduced_dlr_update(model, region, neighborhood_table);
}

GibbsEstimate gibbs_estimate(const PairwiseModel& model, const ChainConfig& config) {
    long burn = config.burn_in >= 0 ? config.burn_in : config.sweeps / 10;
    if (config.sweeps <= burn || burn < 0)
        fail(ErrorKind::InvalidParameter, "gibbs_estimate: sweeps must exceed burn_in >= 0");
    if (config.chains < 1) fail(ErrorKind::InvalidParameter, "gibbs_estimate: chains must be >= 1");

    const int n = model.node_count();
    std::vector<SiteSampler> samplers;
    samplers.reserve(n);
    for (int i = 0; i < n; ++i) samplers.emplace_back(model, i);

    const long kept = config.sweeps - burn;
    std::vector<std::vector<std::vector<double>>> chain_freq(
        config.chains, std::vector<std::vector<double>>(n));
    std::vector<std::vector<double>> pair_freq;
    if (config.track_pairwise) {
        pair_freq.resize(model.edge_count());
        for (int e = 0; e < model.edge_count(); ++e) {
            auto [a, b] = model.topology.edges[e];
            pair_freq[e].assign(static_cast<std::size_t>(model.card(a)) * model.card(b), 0.0);
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int c = 0; c < config.chains; ++c) {
        Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(c)));
        for (int i = 0; i < n; ++i) chain_freq[c][i].assign(model.card(i), 0.0);
        Configuration x(n);
        for (int i = 0; i < n; ++i) x[i] = static_cast<int>(rng.below(model.card(i)));
        for (long sweep = 0; sweep < config.sweeps; ++sweep) {
            if (config.random_sweep_order) {
                // Fisher-Yates with our own rng keeps the permutation portable
                for (int i = n - 1; i > 0; --i)
                    std::swap(order[i], order[rng.below(static_cast<std::uint32_t>(i + 1))]);
            }
            for (int k = 0; k < n; ++k) {
                int site = order[k];
                auto cond = samplers[site].conditional(model, site, x);
                x[site] = sample_from(cond, rng);
            }
            if (sweep >= burn) {
                for (int i = 0; i < n; ++i) chain_freq[c][i][x[i]] += 1.0;
                if (config.track_pairwise)
                    for (int e = 0; e < model.edge_count(); ++e) {
                        auto [a, b] = model.topology.edges[e];
                        pair_freq[e][static_cast<std::size_t>(x[a]) * model.card(b) + x[b]] += 1.0;
                    }
            }
        }
        for (int i = 0; i < n; ++i)
            for (double& v : chain_freq[c][i]) v /= static_cast<double>(kept);
    }

    GibbsEstimate out;
    out.samples_per_chain = kept;
    out.beliefs.level = config.track_pairwise ? BeliefLevel::Pair : BeliefLevel::Singleton;
    out.beliefs.node.resize(n);
    out.standard_error.resize(n);
    for (int i = 0; i < n; ++i) {
        out.beliefs.node[i].assign(model.card(i), 0.0);
        out.standard_error[i].assign(model.card(i), 0.0);
        for (int s = 0; s < model.card(i); ++s) {
            double mean = 0.0;
            for (int c = 0; c < config.chains; ++c) mean += chain_freq[c][i][s];
            mean /= config.chains;
            out.beliefs.node[i][s] = mean;
            if (config.chains > 1) {
                double var = 0.0;
                for (int c = 0; c < config.chains; ++c) {
                    double d = chain_freq[c][i][s] - mean;
                    var += d * d;
                }
                var /= (config.chains - 1);
                out.standard_error[i][s] = std::sqrt(var / config.chains);
            }
        }
    }
    if (config.track_pairwise) {
        out.beliefs.edge.resize(model.edge_count());
        const double total = static_cast<double>(kept) * config.chains;
        for (int e = 0; e < model.edge_count(); ++e) {
            out.beliefs.edge[e] = pair_freq[e];
            for (double& v : out.beliefs.edge[e]) v /= total;
        }
    }
    return out;
}

}  // namespace dlr
