#include "dlr/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dlr/error.hpp"
#include "dlr/states.hpp"

namespace dlr {

namespace {

constexpr std::uint64_t kMaxConfigs = 1ull << 24;

void check_size(const PairwiseModel& model) {
    std::uint64_t n = 1;
    for (int c : model.cardinalities) {
        n *= static_cast<std::uint64_t>(c);
        if (n > kMaxConfigs)
            fail(ErrorKind::ModelTooLarge, "exact: state space exceeds 2^24 configurations");
    }
}

void check_config(const PairwiseModel& model, const std::vector<int>& config) {
    if (static_cast<int>(config.size()) != model.node_count())
        fail(ErrorKind::InvalidConfig, "config: expected one state per node");
    for (int i = 0; i < model.node_count(); ++i)
        if (config[i] < 0 || config[i] >= model.card(i))
            fail(ErrorKind::InvalidConfig, "config[" + std::to_string(i) + "]: state out of range");
}

// Precomputed log tables; -inf encodes zero entries.
struct LogTables {
    std::vector<std::vector<double>> unary;
    std::vector<std::vector<double>> pairwise;

    explicit LogTables(const PairwiseModel& model) {
        auto log_of = [](double v) {
            return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
        };
        unary.resize(model.unary.size());
        for (std::size_t i = 0; i < model.unary.size(); ++i) {
            unary[i].resize(model.unary[i].size());
            std::transform(model.unary[i].begin(), model.unary[i].end(), unary[i].begin(), log_of);
        }
        pairwise.resize(model.pairwise.size());
        for (std::size_t e = 0; e < model.pairwise.size(); ++e) {
            pairwise[e].resize(model.pairwise[e].size());
            std::transform(model.pairwise[e].begin(), model.pairwise[e].end(),
                           pairwise[e].begin(), log_of);
        }
    }

    double log_weight(const PairwiseModel& model, const std::vector<int>& x) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < unary.size(); ++i) acc += unary[i][x[i]];
        for (std::size_t e = 0; e < pairwise.size(); ++e) {
            auto [a, b] = model.topology.edges[e];
            acc += pairwise[e][static_cast<std::size_t>(x[a]) * model.card(b) + x[b]];
        }
        return acc;
    }
};

struct KahanSum {
    double sum = 0.0;
    double c = 0.0;
    void add(double v) {
        double y = v - c;
        double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

// Max of log-weights over all configurations (first pass of the two-pass
// marginal accumulation).
double max_log_weight(const PairwiseModel& model, const LogTables& lt) {
    double mx = -std::numeric_limits<double>::infinity();
    for (StateIterator it(model.cardinalities); !it.done(); it.advance())
        mx = std::max(mx, lt.log_weight(model, it.state()));
    return mx;
}

}  // namespace

double log_weight(const PairwiseModel& model, const std::vector<int>& config) {
    check_config(model, config);
    return LogTables(model).log_weight(model, config);
}

double log_partition(const PairwiseModel& model) {
    check_size(model);
    LogTables lt(model);
    // Streaming log-sum-exp: keep a running max m and sum of exp(w - m).
    double m = -std::numeric_limits<double>::infinity();
    double s = 0.0;
    for (StateIterator it(model.cardinalities); !it.done(); it.advance()) {
        double w = lt.log_weight(model, it.state());
        if (w == -std::numeric_limits<double>::infinity()) continue;
        if (w <= m) {
            s += std::exp(w - m);
        } else {
            s = s * std::exp(m - w) + 1.0;
            m = w;
        }
    }
    if (s <= 0.0) fail(ErrorKind::InvalidParameter, "log_partition: zero partition function");
    return m + std::log(s);
}

ExactSummary exact_marginals(const PairwiseModel& model) {
    check_size(model);
    LogTables lt(model);
    const double mx = max_log_weight(model, lt);
    if (!std::isfinite(mx))
        fail(ErrorKind::InvalidParameter, "exact_marginals: zero partition function");

    const int n = model.node_count();
    const int ne = model.edge_count();
    std::vector<std::vector<KahanSum>> node_acc(n);
    for (int i = 0; i < n; ++i) node_acc[i].resize(model.card(i));
    std::vector<std::vector<KahanSum>> edge_acc(ne);
    for (int e = 0; e < ne; ++e) {
        auto [a, b] = model.topology.edges[e];
        edge_acc[e].resize(static_cast<std::size_t>(model.card(a)) * model.card(b));
    }
    KahanSum total;

    for (StateIterator it(model.cardinalities); !it.done(); it.advance()) {
        const auto& x = it.state();
        double w = std::exp(lt.log_weight(model, x) - mx);
        if (w == 0.0) continue;
        total.add(w);
        for (int i = 0; i < n; ++i) node_acc[i][x[i]].add(w);
        for (int e = 0; e < ne; ++e) {
            auto [a, b] = model.topology.edges[e];
            edge_acc[e][static_cast<std::size_t>(x[a]) * model.card(b) + x[b]].add(w);
        }
    }

    ExactSummary out;
    out.log_partition = mx + std::log(total.sum);
    out.singleton_marginals.resize(n);
    for (int i = 0; i < n; ++i) {
        out.singleton_marginals[i].resize(model.card(i));
        for (int s = 0; s < model.card(i); ++s)
            out.singleton_marginals[i][s] = node_acc[i][s].sum / total.sum;
    }
    out.pairwise_marginals.resize(ne);
    for (int e = 0; e < ne; ++e) {
        out.pairwise_marginals[e].resize(edge_acc[e].size());
        for (std::size_t s = 0; s < edge_acc[e].size(); ++s)
            out.pairwise_marginals[e][s] = edge_acc[e][s].sum / total.sum;
    }
    return out;
}

double joint_probability(const PairwiseModel& model, const std::vector<int>& config) {
    check_config(model, config);
    check_size(model);
    LogTables lt(model);
    double w = lt.log_weight(model, config);
    if (w == -std::numeric_limits<double>::infinity()) return 0.0;
    return std::exp(w - log_partition(model));
}

std::vector<double> exact_subset_marginal(const PairwiseModel& model,
                                          const std::vector<NodeId>& nodes) {
    check_size(model);
    for (NodeId v : nodes)
        if (v < 0 || v >= model.node_count())
            fail(ErrorKind::InvalidRegion, "subset node " + std::to_string(v) + " out of range");
    LogTables lt(model);
    const double mx = max_log_weight(model, lt);
    if (!std::isfinite(mx))
        fail(ErrorKind::InvalidParameter, "exact_subset_marginal: zero partition function");

    std::vector<int> radices;
    for (NodeId v : nodes) radices.push_back(model.card(v));
    std::vector<KahanSum> acc(state_space_size(radices));
    KahanSum total;
    std::vector<int> sub(nodes.size());
    for (StateIterator it(model.cardinalities); !it.done(); it.advance()) {
        const auto& x = it.state();
        double w = std::exp(lt.log_weight(model, x) - mx);
        if (w == 0.0) continue;
        total.add(w);
        for (std::size_t k = 0; k < nodes.size(); ++k) sub[k] = x[nodes[k]];
        acc[state_index(radices, sub)].add(w);
    }
    std::vector<double> out(acc.size());
    for (std::size_t s = 0; s < acc.size(); ++s) out[s] = acc[s].sum / total.sum;
    return out;
}

}  // namespace dlr
