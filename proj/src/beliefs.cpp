#include "dlr/beliefs.hpp"

#include <cmath>
#include <string>

#include "dlr/error.hpp"
#include "dlr/rng.hpp"

namespace dlr {

void normalize(std::vector<double>& table) {
    double s = 0.0;
    for (double v : table) s += v;
    if (!(s > 0.0) || !std::isfinite(s))
        fail(ErrorKind::InvalidParameter, "normalize: nonpositive or non-finite table sum");
    for (double& v : table) v /= s;
}

BeliefSet init_beliefs(const PairwiseModel& model, BeliefLevel level) {
    BeliefSet b;
    b.level = level;
    if (b.has_nodes()) {
        b.node.resize(model.node_count());
        for (int i = 0; i < model.node_count(); ++i)
            b.node[i].assign(model.card(i), 1.0 / model.card(i));
    }
    if (b.has_edges()) {
        b.edge.resize(model.edge_count());
        for (int e = 0; e < model.edge_count(); ++e) {
            auto [a, c] = model.topology.edges[e];
            int sz = model.card(a) * model.card(c);
            b.edge[e].assign(sz, 1.0 / sz);
        }
    }
    return b;
}

MessageSet init_messages(const PairwiseModel& model) {
    MessageSet m;
    m.table.resize(2 * model.edge_count());
    for (int e = 0; e < model.edge_count(); ++e) {
        auto [a, c] = model.topology.edges[e];
        m.table[2 * e].assign(model.card(c), 1.0 / model.card(c));
        m.table[2 * e + 1].assign(model.card(a), 1.0 / model.card(a));
    }
    return m;
}

BeliefSet random_beliefs(const PairwiseModel& model, BeliefLevel level, std::uint64_t seed) {
    BeliefSet b = init_beliefs(model, level);
    Rng rng(seed);
    for (auto& t : b.node) {
        for (double& v : t) v = 0.05 + rng.uniform01();
        normalize(t);
    }
    for (auto& t : b.edge) {
        for (double& v : t) v = 0.05 + rng.uniform01();
        normalize(t);
    }
    return b;
}

MessageSet random_messages(const PairwiseModel& model, std::uint64_t seed) {
    MessageSet m = init_messages(model);
    Rng rng(seed);
    for (auto& t : m.table) {
        for (double& v : t) v = 0.05 + rng.uniform01();
        normalize(t);
    }
    return m;
}

std::vector<std::vector<double>> derived_singletons(const PairwiseModel& model,
                                                    const BeliefSet& beliefs) {
    if (beliefs.level != BeliefLevel::PairOnly) return beliefs.node;
    std::vector<std::vector<double>> out(model.node_count());
    for (int i = 0; i < model.node_count(); ++i) out[i].assign(model.card(i), 0.0);
    for (int e = 0; e < model.edge_count(); ++e) {
        auto [a, b] = model.topology.edges[e];
        const auto& t = beliefs.edge[e];
        for (int xa = 0; xa < model.card(a); ++xa)
            for (int xb = 0; xb < model.card(b); ++xb) {
                double v = t[static_cast<std::size_t>(xa) * model.card(b) + xb];
                out[a][xa] += v;
                out[b][xb] += v;
            }
    }
    for (int i = 0; i < model.node_count(); ++i) {
        int deg = model.topology.degree(i);
        if (deg == 0)
            fail(ErrorKind::InvalidRegion,
                 "derived_singletons: node " + std::to_string(i) + " has no incident edges");
        for (double& v : out[i]) v /= deg;
    }
    return out;
}

void validate_beliefs(const PairwiseModel& model, const BeliefSet& beliefs, double tol) {
    auto check_table = [&](const std::vector<double>& t, std::size_t want, const std::string& where) {
        if (t.size() != want) fail(ErrorKind::InvalidParameter, where + ": wrong table size");
        double s = 0.0;
        for (double v : t) {
            if (!(v >= 0.0) || !std::isfinite(v))
                fail(ErrorKind::InvalidParameter, where + ": negative or non-finite entry");
            s += v;
        }
        if (std::fabs(s - 1.0) > tol)
            fail(ErrorKind::InvalidParameter, where + ": table sum deviates from 1");
    };
    if (beliefs.has_nodes()) {
        if (static_cast<int>(beliefs.node.size()) != model.node_count())
            fail(ErrorKind::InvalidParameter, "beliefs: expected one singleton table per node");
        for (int i = 0; i < model.node_count(); ++i)
            check_table(beliefs.node[i], model.card(i), "b[" + std::to_string(i) + "]");
    }
    if (beliefs.has_edges()) {
        if (static_cast<int>(beliefs.edge.size()) != model.edge_count())
            fail(ErrorKind::InvalidParameter, "beliefs: expected one pairwise table per edge");
        for (int e = 0; e < model.edge_count(); ++e) {
            auto [a, b] = model.topology.edges[e];
            check_table(beliefs.edge[e],
                        static_cast<std::size_t>(model.card(a)) * model.card(b),
                        "b_edge[" + std::to_string(e) + "]");
        }
    }
}

double local_consistency_gap(const PairwiseModel& model, const BeliefSet& beliefs) {
    if (beliefs.level != BeliefLevel::Pair)
        fail(ErrorKind::InvalidParameter, "local_consistency_gap: requires level-2 beliefs");
    double gap = 0.0;
    for (int e = 0; e < model.edge_count(); ++e) {
        auto [a, b] = model.topology.edges[e];
        const auto& t = beliefs.edge[e];
        for (int xa = 0; xa < model.card(a); ++xa) {
            double row = 0.0;
            for (int xb = 0; xb < model.card(b); ++xb)
                row += t[static_cast<std::size_t>(xa) * model.card(b) + xb];
            gap = std::max(gap, std::fabs(row - beliefs.node[a][xa]));
        }
        for (int xb = 0; xb < model.card(b); ++xb) {
            double col = 0.0;
            for (int xa = 0; xa < model.card(a); ++xa)
                col += t[static_cast<std::size_t>(xa) * model.card(b) + xb];
            gap = std::max(gap, std::fabs(col - beliefs.node[b][xb]));
        }
    }
    return gap;
}

double l1_singleton_error(const PairwiseModel& model, const BeliefSet& beliefs,
                          const std::vector<std::vector<double>>& reference) {
    auto singles = derived_singletons(model, beliefs);
    double total = 0.0;
    for (int i = 0; i < model.node_count(); ++i)
        for (int s = 0; s < model.card(i); ++s)
            total += std::fabs(singles[i][s] - reference[i][s]);
    return total / model.node_count();
}

}  // namespace dlr
