#include "dlr/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dlr/error.hpp"
#include "dlr/exact.hpp"
#include "dlr/rng.hpp"
#include "dlr/states.hpp"

namespace dlr {

namespace {

constexpr std::size_t kMaxBoundaryConfigs = 1ull << 20;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct BoundaryLayout {
    std::vector<NodeId> nbrs;  // sorted
    std::vector<int> cards;
    std::size_t configs = 1;
};

BoundaryLayout boundary_layout(const PairwiseModel& model, const Region& region) {
    BoundaryLayout b;
    b.nbrs = neighborhood(model.topology, region);
    for (NodeId v : b.nbrs) {
        b.cards.push_back(model.card(v));
        b.configs *= static_cast<std::size_t>(model.card(v));
        if (b.configs > kMaxBoundaryConfigs)
            fail(ErrorKind::ModelTooLarge, "region boundary exceeds 2^20 configurations");
    }
    return b;
}

// cond[c * S + s] = P(region state s | boundary config c), configs ascending
// in row-major order over the sorted neighborhood.
std::vector<double> conditional_cache(const PairwiseModel& model, const Region& region,
                                      const BoundaryLayout& layout, int states) {
    std::vector<double> out(layout.configs * static_cast<std::size_t>(states));
    std::size_t c = 0;
    for (StateIterator it(layout.cards); !it.done(); it.advance(), ++c) {
        auto cond = local_conditional(model, region, it.state());
        std::copy(cond.begin(), cond.end(), out.begin() + c * states);
    }
    return out;
}

// out[s] = sum_c mu[c] * cond[c*S+s], then normalized.
void contract(const std::vector<double>& cond, std::size_t configs, int states,
              const double* mu, std::vector<double>& out) {
    out.assign(states, 0.0);
    for (std::size_t c = 0; c < configs; ++c) {
        double w = mu[c];
        if (w == 0.0) continue;
        const double* row = cond.data() + c * states;
        for (int s = 0; s < states; ++s) out[s] += w * row[s];
    }
    normalize(out);
}

// Same contraction with mu formed on the fly as the product of singleton
// beliefs over the layout's nodes. Arithmetic matches product_table +
// contract bit for bit.
void contract_product(const std::vector<double>& cond, const BoundaryLayout& layout, int states,
                      const std::vector<std::vector<double>>& singles, std::vector<double>& out) {
    out.assign(states, 0.0);
    std::size_t c = 0;
    for (StateIterator it(layout.cards); !it.done(); it.advance(), ++c) {
        const auto& st = it.state();
        double w = 1.0;
        for (std::size_t k = 0; k < layout.nbrs.size(); ++k) w *= singles[layout.nbrs[k]][st[k]];
        if (w == 0.0) continue;
        const double* row = cond.data() + c * states;
        for (int s = 0; s < states; ++s) out[s] += w * row[s];
    }
    normalize(out);
}

struct SideFactor {
    int edge;           // undirected edge index of (region node, neighbor)
    bool region_first;  // region node is edges[edge].first
    int nbr_pos;        // neighbor's position in the layout
    int nbr_card;
};

std::vector<SideFactor> side_factors(const PairwiseModel& model, NodeId center, NodeId exclude,
                                     const BoundaryLayout& layout) {
    std::vector<SideFactor> out;
    for (NodeId k : model.topology.adjacency[center]) {
        if (k == exclude) continue;
        SideFactor f;
        f.edge = model.topology.edge_index(center, k);
        f.region_first = model.topology.edges[f.edge].first == center;
        f.nbr_pos = static_cast<int>(
            std::lower_bound(layout.nbrs.begin(), layout.nbrs.end(), k) - layout.nbrs.begin());
        f.nbr_card = model.card(k);
        out.push_back(f);
    }
    return out;
}

double factor_value(const PairwiseModel& model, const std::vector<std::vector<double>>& edge_tables,
                    const SideFactor& f, int x_region, int x_nbr) {
    const auto& t = edge_tables[f.edge];
    auto [a, b] = model.topology.edges[f.edge];
    if (f.region_first) return t[static_cast<std::size_t>(x_region) * model.card(b) + x_nbr];
    return t[static_cast<std::size_t>(x_nbr) * model.card(b) + x_region];
}

double clamped(double v, double clamp, long* events) {
    if (v < clamp) {
        if (events) ++*events;
        return clamp;
    }
    return v;
}

struct NodeWork {
    BoundaryLayout layout;
    std::vector<double> cond;
    std::vector<double> logcond;       // MF generic path
    std::vector<SideFactor> side;      // Eq. 7 factors (level-2 updates)
};

struct EdgeWork {
    NodeId a, b;
    int sa, sb;  // cardinalities
    BoundaryLayout layout;
    std::vector<double> cond;
    std::vector<SideFactor> side_a, side_b;  // Eq. 8 factors
};

// Raw (unnormalized) Eq.-7 marginal over the boundary of node i; returns the
// normalizer Z_i.
double node_boundary_distribution(const PairwiseModel& model, const NodeWork& w, NodeId i,
                                  const std::vector<std::vector<double>>& edge_tables,
                                  const std::vector<std::vector<double>>& singles,
                                  const std::vector<std::vector<double>>& clamped_singles,
                                  std::vector<double>& B) {
    B.assign(w.layout.configs, 0.0);
    const int si = model.card(i);
    double z = 0.0;
    std::size_t c = 0;
    for (StateIterator it(w.layout.cards); !it.done(); it.advance(), ++c) {
        const auto& st = it.state();
        double acc = 0.0;
        for (int xi = 0; xi < si; ++xi) {
            double v = singles[i][xi];
            for (const auto& f : w.side)
                v *= factor_value(model, edge_tables, f, xi, st[f.nbr_pos]) /
                     clamped_singles[i][xi];
            acc += v;
        }
        B[c] = acc;
        z += acc;
    }
    return z;
}

// Raw Eq.-8 marginal over the boundary of edge (a,b); returns Z_ab.
double edge_boundary_distribution(const PairwiseModel& model, const EdgeWork& w,
                                  const std::vector<double>& lead,
                                  const std::vector<std::vector<double>>& edge_tables,
                                  const std::vector<double>& den_a,
                                  const std::vector<double>& den_b, std::vector<double>& B,
                                  std::vector<double>& pa, std::vector<double>& pb) {
    B.assign(w.layout.configs, 0.0);
    pa.resize(w.sa);
    pb.resize(w.sb);
    double z = 0.0;
    std::size_t c = 0;
    for (StateIterator it(w.layout.cards); !it.done(); it.advance(), ++c) {
        const auto& st = it.state();
        for (int xa = 0; xa < w.sa; ++xa) {
            double v = 1.0;
            for (const auto& f : w.side_a)
                v *= factor_value(model, edge_tables, f, xa, st[f.nbr_pos]) / den_a[xa];
            pa[xa] = v;
        }
        for (int xb = 0; xb < w.sb; ++xb) {
            double v = 1.0;
            for (const auto& f : w.side_b)
                v *= factor_value(model, edge_tables, f, xb, st[f.nbr_pos]) / den_b[xb];
            pb[xb] = v;
        }
        double acc = 0.0;
        for (int xa = 0; xa < w.sa; ++xa)
            for (int xb = 0; xb < w.sb; ++xb)
                acc += lead[static_cast<std::size_t>(xa) * w.sb + xb] * pa[xa] * pb[xb];
        B[c] = acc;
        z += acc;
    }
    return z;
}

void normalize_raw(std::vector<double>& B, double z, const char* what) {
    if (!(z > 0.0) || !std::isfinite(z))
        fail(ErrorKind::DegenerateConditional, std::string(what) + ": degenerate normalizer");
    for (double& v : B) v /= z;
}

// Per-edge marginals of pair beliefs onto each endpoint (the CP singleton
// substitution).
void edge_marginals(const PairwiseModel& model, const std::vector<std::vector<double>>& edge_tables,
                    std::vector<std::vector<double>>& onto_first,
                    std::vector<std::vector<double>>& onto_second) {
    onto_first.assign(model.edge_count(), {});
    onto_second.assign(model.edge_count(), {});
    for (int e = 0; e < model.edge_count(); ++e) {
        auto [a, b] = model.topology.edges[e];
        onto_first[e].assign(model.card(a), 0.0);
        onto_second[e].assign(model.card(b), 0.0);
        const auto& t = edge_tables[e];
        for (int xa = 0; xa < model.card(a); ++xa)
            for (int xb = 0; xb < model.card(b); ++xb) {
                double v = t[static_cast<std::size_t>(xa) * model.card(b) + xb];
                onto_first[e][xa] += v;
                onto_second[e][xb] += v;
            }
    }
}

double logistic(double h) {
    if (h >= 0.0) return 1.0 / (1.0 + std::exp(-h));
    double e = std::exp(h);
    return e / (1.0 + e);
}

class Engine {
public:
    Engine(const PairwiseModel& model, Algorithm alg, double clamp)
        : model_(model), alg_(alg), clamp_(clamp) {
        switch (alg) {
            case Algorithm::Fn:
                build_node_regions(false, false);
                break;
            case Algorithm::Mf:
                if (!model.ising) build_node_regions(true, false);
                break;
            case Algorithm::Mf2:
                if (!model.ising || !model.is_binary())
                    fail(ErrorKind::UnsupportedModel, "mf2 requires a binary Ising model");
                break;
            case Algorithm::Fn2:
                build_edge_regions(false);
                break;
            case Algorithm::Cp:
                build_edge_regions(true);
                break;
            case Algorithm::BpDlr:
                build_node_regions(false, true);
                build_edge_regions(true);
                break;
            case Algorithm::Bp:
                build_directed_edges();
                break;
        }
    }

    long clamp_events = 0;

    void step(const BeliefSet& in, BeliefSet& out) {
        switch (alg_) {
            case Algorithm::Fn: fn_into(in, out); return;
            case Algorithm::Fn2: fn2_into(in, out); return;
            case Algorithm::Cp: cp_into(in, out); return;
            case Algorithm::Mf:
                model_.ising ? mf_closed_into(in, out) : mf_generic_into(in, out);
                return;
            case Algorithm::Mf2: mf2_into(in, out); return;
            case Algorithm::BpDlr: bp_dlr_into(in, out); return;
            case Algorithm::Bp:
                fail(ErrorKind::InvalidParameter, "bp iterates messages, not beliefs");
        }
    }

    // Gauss-Seidel sweep (Fn/Mf); updates `state` in place, returns the
    // max-abs change over the sweep.
    double step_sequential(BeliefSet& state) {
        double res = 0.0;
        std::vector<double> fresh;
        for (int i = 0; i < model_.node_count(); ++i) {
            node_update(state, i, fresh);
            for (int s = 0; s < model_.card(i); ++s)
                res = std::max(res, std::fabs(fresh[s] - state.node[i][s]));
            state.node[i] = fresh;
        }
        return res;
    }

    void step_messages(const MessageSet& in, MessageSet& out) {
        out.table.resize(in.table.size());
        std::vector<double> w;
        for (std::size_t d = 0; d < directed_.size(); ++d) {
            const auto& de = directed_[d];
            const int ssrc = model_.card(de.src);
            const int sdst = model_.card(de.dst);
            w.assign(ssrc, 0.0);
            for (int xs = 0; xs < ssrc; ++xs) {
                double v = model_.unary[de.src][xs];
                for (int in_idx : de.in_msgs) v *= in.table[in_idx][xs];
                w[xs] = v;
            }
            auto& m = out.table[d];
            m.assign(sdst, 0.0);
            const auto& psi = model_.pairwise[de.edge];
            for (int xs = 0; xs < ssrc; ++xs) {
                for (int xd = 0; xd < sdst; ++xd) {
                    double p = de.src_first
                                   ? psi[static_cast<std::size_t>(xs) * sdst + xd]
                                   : psi[static_cast<std::size_t>(xd) * ssrc + xs];
                    m[xd] += p * w[xs];
                }
            }
            normalize(m);
        }
    }

    void beliefs_of(const MessageSet& m, BeliefSet& out) {
        if (out.node.empty()) out = init_beliefs(model_, BeliefLevel::Pair);
        for (int i = 0; i < model_.node_count(); ++i) {
            auto& b = out.node[i];
            for (int s = 0; s < model_.card(i); ++s) {
                double v = model_.unary[i][s];
                for (int idx : incoming_[i]) v *= m.table[idx][s];
                b[s] = v;
            }
            normalize(b);
        }
        for (int e = 0; e < model_.edge_count(); ++e) {
            auto [a, b] = model_.topology.edges[e];
            const int sa = model_.card(a), sb = model_.card(b);
            auto& t = out.edge[e];
            for (int xa = 0; xa < sa; ++xa) {
                double va = model_.unary[a][xa];
                for (int idx : incoming_[a])
                    if (directed_[idx].src != b) va *= m.table[idx][xa];
                for (int xb = 0; xb < sb; ++xb) {
                    double vb = model_.unary[b][xb];
                    for (int idx : incoming_[b])
                        if (directed_[idx].src != a) vb *= m.table[idx][xb];
                    t[static_cast<std::size_t>(xa) * sb + xb] =
                        va * vb * model_.pairwise[e][static_cast<std::size_t>(xa) * sb + xb];
                }
            }
            normalize(t);
        }
    }

    const std::vector<NodeWork>& node_work() const { return nodes_; }
    const std::vector<EdgeWork>& edge_work() const { return edges_; }

private:
    void build_node_regions(bool with_log, bool with_side) {
        nodes_.resize(model_.node_count());
        for (int i = 0; i < model_.node_count(); ++i) {
            auto& w = nodes_[i];
            w.layout = boundary_layout(model_, Region::node(i));
            w.cond = conditional_cache(model_, Region::node(i), w.layout, model_.card(i));
            if (with_log) {
                w.logcond.resize(w.cond.size());
                for (std::size_t k = 0; k < w.cond.size(); ++k)
                    w.logcond[k] = w.cond[k] > 0.0 ? std::log(w.cond[k]) : -kInf;
            }
            if (with_side) w.side = side_factors(model_, i, -1, w.layout);
        }
    }

    void build_edge_regions(bool with_side) {
        edges_.resize(model_.edge_count());
        for (int e = 0; e < model_.edge_count(); ++e) {
            auto& w = edges_[e];
            auto [a, b] = model_.topology.edges[e];
            w.a = a;
            w.b = b;
            w.sa = model_.card(a);
            w.sb = model_.card(b);
            Region r = Region::edge(a, b);
            w.layout = boundary_layout(model_, r);
            w.cond = conditional_cache(model_, r, w.layout, w.sa * w.sb);
            if (with_side) {
                w.side_a = side_factors(model_, a, b, w.layout);
                w.side_b = side_factors(model_, b, a, w.layout);
            }
        }
    }

    struct DirectedEdge {
        NodeId src, dst;
        int edge;
        bool src_first;
        std::vector<int> in_msgs;  // directed indices k->src, k != dst
    };

    void build_directed_edges() {
        directed_.resize(2 * model_.edge_count());
        for (int e = 0; e < model_.edge_count(); ++e) {
            auto [a, b] = model_.topology.edges[e];
            directed_[2 * e] = {a, b, e, true, {}};
            directed_[2 * e + 1] = {b, a, e, false, {}};
        }
        incoming_.assign(model_.node_count(), {});
        for (std::size_t d = 0; d < directed_.size(); ++d)
            incoming_[directed_[d].dst].push_back(static_cast<int>(d));
        for (auto& de : directed_) {
            for (int idx : incoming_[de.src])
                if (directed_[idx].src != de.dst) de.in_msgs.push_back(idx);
        }
    }

    void node_update(const BeliefSet& in, int i, std::vector<double>& out) {
        if (alg_ == Algorithm::Fn) {
            contract_product(nodes_[i].cond, nodes_[i].layout, model_.card(i), in.node, out);
            return;
        }
        // MF
        if (model_.ising) {
            const auto& p = *model_.ising;
            double h = p.phi[i];
            for (NodeId j : model_.topology.adjacency[i])
                h += p.theta[model_.topology.edge_index(i, j)] * in.node[j][1];
            out.assign(2, 0.0);
            out[1] = logistic(h);
            out[0] = 1.0 - out[1];
            return;
        }
        mf_generic_node(in, i, out);
    }

    void fn_into(const BeliefSet& in, BeliefSet& out) {
        ensure(out, BeliefLevel::Singleton);
        for (int i = 0; i < model_.node_count(); ++i)
            contract_product(nodes_[i].cond, nodes_[i].layout, model_.card(i), in.node,
                             out.node[i]);
    }

    void mf_generic_node(const BeliefSet& in, int i, std::vector<double>& out) {
        const auto& w = nodes_[i];
        const int si = model_.card(i);
        std::vector<double> L(si, 0.0);
        std::size_t c = 0;
        for (StateIterator it(w.layout.cards); !it.done(); it.advance(), ++c) {
            const auto& st = it.state();
            double weight = 1.0;
            for (std::size_t k = 0; k < w.layout.nbrs.size(); ++k)
                weight *= in.node[w.layout.nbrs[k]][st[k]];
            if (weight == 0.0) continue;
            const double* row = w.logcond.data() + c * si;
            for (int s = 0; s < si; ++s) {
                if (row[s] == -kInf)
                    fail(ErrorKind::LogOfZero,
                         "mf: zero conditional with positive weight at node " + std::to_string(i) +
                             ", boundary config " + std::to_string(c));
                L[s] += weight * row[s];
            }
        }
        double mx = *std::max_element(L.begin(), L.end());
        out.assign(si, 0.0);
        for (int s = 0; s < si; ++s) out[s] = std::exp(L[s] - mx);
        normalize(out);
    }

    void mf_generic_into(const BeliefSet& in, BeliefSet& out) {
        ensure(out, BeliefLevel::Singleton);
        for (int i = 0; i < model_.node_count(); ++i) mf_generic_node(in, i, out.node[i]);
    }

    void mf_closed_into(const BeliefSet& in, BeliefSet& out) {
        ensure(out, BeliefLevel::Singleton);
        std::vector<double> fresh;
        for (int i = 0; i < model_.node_count(); ++i) {
            node_update(in, i, fresh);
            out.node[i] = fresh;
        }
    }

    void mf2_into(const BeliefSet& in, BeliefSet& out) {
        ensure(out, BeliefLevel::Singleton);
        const auto& p = *model_.ising;
        const auto& topo = model_.topology;
        for (int i = 0; i < model_.node_count(); ++i) {
            const auto& nbrs = topo.adjacency[i];
            if (nbrs.empty()) {
                out.node[i][1] = logistic(p.phi[i]);
                out.node[i][0] = 1.0 - out.node[i][1];
                continue;
            }
            double acc = 0.0;
            for (NodeId k : nbrs) {
                double hi = p.phi[i];
                for (NodeId j : nbrs)
                    if (j != k) hi += p.theta[topo.edge_index(i, j)] * in.node[j][1];
                double hk = p.phi[k];
                for (NodeId l : topo.adjacency[k])
                    if (l != i) hk += p.theta[topo.edge_index(k, l)] * in.node[l][1];
                double th = p.theta[topo.edge_index(i, k)];
                // pair (x_i, x_k) exponents, max-subtracted
                double e00 = 0.0, e01 = hk, e10 = hi, e11 = hi + hk + th;
                double mx = std::max(std::max(e00, e01), std::max(e10, e11));
                double w00 = std::exp(e00 - mx), w01 = std::exp(e01 - mx);
                double w10 = std::exp(e10 - mx), w11 = std::exp(e11 - mx);
                acc += (w10 + w11) / (w00 + w01 + w10 + w11);
            }
            out.node[i][1] = acc / nbrs.size();
            out.node[i][0] = 1.0 - out.node[i][1];
        }
    }

    void fn2_into(const BeliefSet& in, BeliefSet& out) {
        ensure(out, BeliefLevel::PairOnly);
        auto singles = derived_singletons(model_, in);
        for (int e = 0; e < model_.edge_count(); ++e) {
            const auto& w = edges_[e];
            contract_product(w.cond, w.layout, w.sa * w.sb, singles, out.edge[e]);
        }
    }

    void cp_into(const BeliefSet& in, BeliefSet& out) {
        ensure(out, BeliefLevel::PairOnly);
        std::vector<std::vector<double>> mfirst, msecond;
        edge_marginals(model_, in.edge, mfirst, msecond);
        // clamp denominators
        for (auto& t : mfirst)
            for (double& v : t) v = clamped(v, clamp_, &clamp_events);
        for (auto& t : msecond)
            for (double& v : t) v = clamped(v, clamp_, &clamp_events);
        std::vector<double> B, pa, pb;
        for (int e = 0; e < model_.edge_count(); ++e) {
            const auto& w = edges_[e];
            const auto& den_a = mfirst[e];
            const auto& den_b = msecond[e];
            double z = edge_boundary_distribution(model_, w, in.edge[e], in.edge, den_a, den_b, B,
                                                  pa, pb);
            normalize_raw(B, z, "cp boundary distribution");
            contract(w.cond, w.layout.configs, w.sa * w.sb, B.data(), out.edge[e]);
        }
    }

    void bp_dlr_into(const BeliefSet& in, BeliefSet& out) {
        ensure(out, BeliefLevel::Pair);
        std::vector<std::vector<double>> den(model_.node_count());
        for (int i = 0; i < model_.node_count(); ++i) {
            den[i] = in.node[i];
            for (double& v : den[i]) v = clamped(v, clamp_, &clamp_events);
        }
        std::vector<double> B, pa, pb;
        for (int e = 0; e < model_.edge_count(); ++e) {
            const auto& w = edges_[e];
            double z = edge_boundary_distribution(model_, w, in.edge[e], in.edge, den[w.a],
                                                  den[w.b], B, pa, pb);
            normalize_raw(B, z, "bp boundary distribution");
            contract(w.cond, w.layout.configs, w.sa * w.sb, B.data(), out.edge[e]);
        }
        for (int i = 0; i < model_.node_count(); ++i) {
            const auto& w = nodes_[i];
            double z = node_boundary_distribution(model_, w, i, in.edge, in.node, den, B);
            normalize_raw(B, z, "bp boundary distribution");
            contract(w.cond, w.layout.configs, model_.card(i), B.data(), out.node[i]);
        }
    }

    void ensure(BeliefSet& out, BeliefLevel level) {
        if (out.level != level || (level != BeliefLevel::PairOnly && out.node.empty()) ||
            (level != BeliefLevel::Singleton && out.edge.empty()))
            out = init_beliefs(model_, level);
    }

    const PairwiseModel& model_;
    Algorithm alg_;
    double clamp_;
    std::vector<NodeWork> nodes_;
    std::vector<EdgeWork> edges_;
    std::vector<DirectedEdge> directed_;
    std::vector<std::vector<int>> incoming_;
};

double max_abs_diff(const BeliefSet& x, const BeliefSet& y) {
    double d = 0.0;
    for (std::size_t i = 0; i < x.node.size(); ++i)
        for (std::size_t s = 0; s < x.node[i].size(); ++s)
            d = std::max(d, std::fabs(x.node[i][s] - y.node[i][s]));
    for (std::size_t e = 0; e < x.edge.size(); ++e)
        for (std::size_t s = 0; s < x.edge[e].size(); ++s)
            d = std::max(d, std::fabs(x.edge[e][s] - y.edge[e][s]));
    return d;
}

double kl_term(const std::vector<double>& p, const std::vector<double>& q, double clamp) {
    double acc = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) {
        if (p[s] <= 0.0) continue;
        double den = q[s] < clamp ? clamp : q[s];
        if (!(den > 0.0))
            fail(ErrorKind::DiagnosticFailure, "wskl: zero denominator after clamping");
        acc += p[s] * std::log(p[s] / den);
    }
    return acc;
}

double weighted_kl(const PairwiseModel& model, const BeliefSet& from, const BeliefSet& to,
                   const WsklWeights& weights, double clamp) {
    double acc = 0.0;
    bool any_single = std::any_of(weights.alpha_singleton.begin(), weights.alpha_singleton.end(),
                                  [](double a) { return a != 0.0; });
    if (any_single) {
        auto p = derived_singletons(model, from);
        auto q = derived_singletons(model, to);
        for (int i = 0; i < model.node_count(); ++i)
            if (weights.alpha_singleton[i] != 0.0)
                acc += weights.alpha_singleton[i] * kl_term(p[i], q[i], clamp);
    }
    if (from.has_edges())
        for (int e = 0; e < model.edge_count(); ++e)
            if (weights.alpha_pair[e] != 0.0)
                acc += weights.alpha_pair[e] * kl_term(from.edge[e], to.edge[e], clamp);
    return acc;
}

void damp_tables(std::vector<std::vector<double>>& fresh,
                 const std::vector<std::vector<double>>& old, double d) {
    for (std::size_t t = 0; t < fresh.size(); ++t) {
        for (std::size_t s = 0; s < fresh[t].size(); ++s)
            fresh[t][s] = (1.0 - d) * fresh[t][s] + d * old[t][s];
        normalize(fresh[t]);
    }
}

void check_config(const RunConfig& cfg, Algorithm alg) {
    if (!(cfg.tolerance > 0.0)) fail(ErrorKind::InvalidParameter, "tolerance must be > 0");
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0))
        fail(ErrorKind::InvalidParameter, "damping must be in [0,1)");
    if (cfg.max_iterations < 1) fail(ErrorKind::InvalidParameter, "max_iterations must be >= 1");
    if (cfg.schedule == Schedule::Sequential && alg != Algorithm::Fn && alg != Algorithm::Mf)
        fail(ErrorKind::UnsupportedSchedule,
             "sequential schedule is available for fn and mf only");
}

void finish_report(RunReport& rep) {
    if (!rep.converged && !rep.residual_trace.empty()) {
        std::size_t n = std::min<std::size_t>(100, rep.residual_trace.size());
        double lo = kInf, hi = -kInf;
        for (std::size_t k = rep.residual_trace.size() - n; k < rep.residual_trace.size(); ++k) {
            lo = std::min(lo, rep.residual_trace[k]);
            hi = std::max(hi, rep.residual_trace[k]);
        }
        rep.oscillation_amplitude = hi - lo;
    }
}

[[noreturn]] void rethrow_at(const Error& e, long iter) {
    throw Error(e.kind(), "iteration " + std::to_string(iter) + ": " + e.what());
}

std::pair<BeliefSet, RunReport> run_beliefs(Algorithm alg, const PairwiseModel& model,
                                            const RunConfig& cfg, const BeliefSet* start) {
    Engine eng(model, alg, cfg.clamp_epsilon);
    WsklWeights weights = WsklWeights::singleton_default(model);
    BeliefSet cur;
    if (start) {
        if (start->level != algorithm_level(alg))
            fail(ErrorKind::InvalidParameter, "initial beliefs do not match the algorithm level");
        cur = *start;
    } else {
        cur = cfg.init == InitKind::Uniform
                  ? init_beliefs(model, algorithm_level(alg))
                  : random_beliefs(model, algorithm_level(alg), cfg.init_seed);
    }
    RunReport rep;

    if (cfg.schedule == Schedule::Sequential) {
        for (long iter = 1; iter <= cfg.max_iterations; ++iter) {
            double res;
            try {
                res = eng.step_sequential(cur);
            } catch (const Error& e) {
                rethrow_at(e, iter);
            }
            rep.residual_trace.push_back(res);
            rep.iterations = iter;
            rep.final_residual = res;
            if (res < cfg.tolerance) {
                rep.converged = true;
                break;
            }
        }
        rep.clamp_events = eng.clamp_events;
        finish_report(rep);
        return {std::move(cur), std::move(rep)};
    }

    BeliefSet nxt = cur;
    for (long iter = 1; iter <= cfg.max_iterations; ++iter) {
        try {
            eng.step(cur, nxt);
            if (cfg.record_wskl)
                rep.wskl_trace.push_back(weighted_kl(model, cur, nxt, weights, cfg.clamp_epsilon));
        } catch (const Error& e) {
            rethrow_at(e, iter);
        }
        if (cfg.damping > 0.0) {
            damp_tables(nxt.node, cur.node, cfg.damping);
            damp_tables(nxt.edge, cur.edge, cfg.damping);
        }
        double res = max_abs_diff(cur, nxt);
        rep.residual_trace.push_back(res);
        rep.iterations = iter;
        rep.final_residual = res;
        std::swap(cur, nxt);
        if (res < cfg.tolerance) {
            rep.converged = true;
            break;
        }
    }
    rep.clamp_events = eng.clamp_events;
    finish_report(rep);
    return {std::move(cur), std::move(rep)};
}

}  // namespace

WsklWeights WsklWeights::singleton_default(const PairwiseModel& model) {
    WsklWeights w;
    w.alpha_singleton.assign(model.node_count(), 1.0);
    w.alpha_pair.assign(model.edge_count(), 0.0);
    return w;
}

BeliefLevel algorithm_level(Algorithm alg) {
    switch (alg) {
        case Algorithm::Fn:
        case Algorithm::Mf:
        case Algorithm::Mf2: return BeliefLevel::Singleton;
        case Algorithm::Fn2:
        case Algorithm::Cp: return BeliefLevel::PairOnly;
        case Algorithm::Bp:
        case Algorithm::BpDlr: return BeliefLevel::Pair;
    }
    fail(ErrorKind::InvalidParameter, "unknown algorithm");
}

const char* algorithm_name(Algorithm alg) {
    switch (alg) {
        case Algorithm::Fn: return "fn";
        case Algorithm::Fn2: return "fn2";
        case Algorithm::Cp: return "cp";
        case Algorithm::Mf: return "mf";
        case Algorithm::Mf2: return "mf2";
        case Algorithm::Bp: return "bp";
        case Algorithm::BpDlr: return "bp_dlr";
    }
    return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
    for (Algorithm a : {Algorithm::Fn, Algorithm::Fn2, Algorithm::Cp, Algorithm::Mf,
                        Algorithm::Mf2, Algorithm::Bp, Algorithm::BpDlr})
        if (name == algorithm_name(a)) return a;
    fail(ErrorKind::InvalidParameter, "unknown algorithm name: " + name);
}

BeliefSet fn_step(const PairwiseModel& model, const BeliefSet& beliefs) {
    if (beliefs.level != BeliefLevel::Singleton)
        fail(ErrorKind::InvalidParameter, "fn_step: level-1 beliefs required");
    Engine eng(model, Algorithm::Fn, 1e-12);
    BeliefSet out;
    eng.step(beliefs, out);
    return out;
}

BeliefSet fn2_step(const PairwiseModel& model, const BeliefSet& beliefs) {
    if (beliefs.level != BeliefLevel::PairOnly)
        fail(ErrorKind::InvalidParameter, "fn2_step: level-1.5 beliefs required");
    Engine eng(model, Algorithm::Fn2, 1e-12);
    BeliefSet out;
    eng.step(beliefs, out);
    return out;
}

BeliefSet cp_step(const PairwiseModel& model, const BeliefSet& beliefs, double clamp) {
    if (beliefs.level != BeliefLevel::PairOnly)
        fail(ErrorKind::InvalidParameter, "cp_step: level-1.5 beliefs required");
    Engine eng(model, Algorithm::Cp, clamp);
    BeliefSet out;
    eng.step(beliefs, out);
    return out;
}

BeliefSet mf_step(const PairwiseModel& model, const BeliefSet& beliefs) {
    if (beliefs.level != BeliefLevel::Singleton)
        fail(ErrorKind::InvalidParameter, "mf_step: level-1 beliefs required");
    Engine eng(model, Algorithm::Mf, 1e-12);
    BeliefSet out;
    eng.step(beliefs, out);
    return out;
}

BeliefSet mf_step_generic(const PairwiseModel& model, const BeliefSet& beliefs) {
    if (beliefs.level != BeliefLevel::Singleton)
        fail(ErrorKind::InvalidParameter, "mf_step: level-1 beliefs required");
    PairwiseModel generic = model;
    generic.ising.reset();
    Engine eng(generic, Algorithm::Mf, 1e-12);
    BeliefSet out;
    eng.step(beliefs, out);
    return out;
}

BeliefSet mf2_step(const PairwiseModel& model, const BeliefSet& beliefs) {
    if (beliefs.level != BeliefLevel::Singleton)
        fail(ErrorKind::InvalidParameter, "mf2_step: level-1 beliefs required");
    Engine eng(model, Algorithm::Mf2, 1e-12);
    BeliefSet out;
    eng.step(beliefs, out);
    return out;
}

BeliefSet bp_dlr_step(const PairwiseModel& model, const BeliefSet& beliefs, double clamp) {
    if (beliefs.level != BeliefLevel::Pair)
        fail(ErrorKind::InvalidParameter, "bp_dlr_step: level-2 beliefs required");
    Engine eng(model, Algorithm::BpDlr, clamp);
    BeliefSet out;
    eng.step(beliefs, out);
    return out;
}

MessageSet bp_message_step(const PairwiseModel& model, const MessageSet& messages) {
    Engine eng(model, Algorithm::Bp, 1e-12);
    MessageSet out;
    eng.step_messages(messages, out);
    return out;
}

BeliefSet beliefs_from_messages(const PairwiseModel& model, const MessageSet& messages) {
    Engine eng(model, Algorithm::Bp, 1e-12);
    BeliefSet out;
    eng.beliefs_of(messages, out);
    return out;
}

std::vector<double> product_table(const std::vector<std::vector<double>>& singles,
                                  const std::vector<NodeId>& nodes) {
    std::vector<int> cards;
    for (NodeId v : nodes) cards.push_back(static_cast<int>(singles[v].size()));
    std::vector<double> out;
    out.reserve(state_space_size(cards));
    for (StateIterator it(cards); !it.done(); it.advance()) {
        const auto& st = it.state();
        double w = 1.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) w *= singles[nodes[k]][st[k]];
        out.push_back(w);
    }
    return out;
}

std::vector<double> reduced_dlr_update(const PairwiseModel& model, const Region& region,
                                       const std::vector<double>& neighborhood_table) {
    BoundaryLayout layout = boundary_layout(model, region);
    if (neighborhood_table.size() != layout.configs)
        fail(ErrorKind::InvalidConfig,
             "reduced_dlr_update: neighborhood table has wrong size");
    int states = model.card(region.a) * (region.is_edge() ? model.card(region.b) : 1);
    auto cond = conditional_cache(model, region, layout, states);
    std::vector<double> out;
    contract(cond, layout.configs, states, neighborhood_table.data(), out);
    return out;
}

std::vector<double> bethe_embedding(const PairwiseModel& model, const BeliefSet& beliefs,
                                    const Region& region, double clamp, double* z_out,
                                    long* clamp_events) {
    if (beliefs.level != BeliefLevel::Pair)
        fail(ErrorKind::InvalidParameter, "bethe_embedding: level-2 beliefs required");
    BoundaryLayout layout = boundary_layout(model, region);
    std::vector<double> den_a = beliefs.node[region.a];
    for (double& v : den_a) v = clamped(v, clamp, clamp_events);

    std::vector<int> cards;
    cards.push_back(model.card(region.a));
    if (region.is_edge()) cards.push_back(model.card(region.b));
    for (int c : layout.cards) cards.push_back(c);
    std::vector<double> out(state_space_size(cards), 0.0);

    double z = 0.0;
    if (!region.is_edge()) {
        auto side = side_factors(model, region.a, -1, layout);
        std::size_t idx = 0;
        for (int xa = 0; xa < cards[0]; ++xa) {
            for (StateIterator it(layout.cards); !it.done(); it.advance(), ++idx) {
                const auto& st = it.state();
                double v = beliefs.node[region.a][xa];
                for (const auto& f : side)
                    v *= factor_value(model, beliefs.edge, f, xa, st[f.nbr_pos]) / den_a[xa];
                out[idx] = v;
                z += v;
            }
        }
    } else {
        std::vector<double> den_b = beliefs.node[region.b];
        for (double& v : den_b) v = clamped(v, clamp, clamp_events);
        auto side_a = side_factors(model, region.a, region.b, layout);
        auto side_b = side_factors(model, region.b, region.a, layout);
        const int sb = model.card(region.b);
        const int eidx = model.topology.edge_index(region.a, region.b);
        const bool a_first = model.topology.edges[eidx].first == region.a;
        std::size_t idx = 0;
        for (int xa = 0; xa < cards[0]; ++xa) {
            for (int xb = 0; xb < sb; ++xb) {
                double lead = a_first
                                  ? beliefs.edge[eidx][static_cast<std::size_t>(xa) * sb + xb]
                                  : beliefs.edge[eidx][static_cast<std::size_t>(xb) * cards[0] + xa];
                for (StateIterator it(layout.cards); !it.done(); it.advance(), ++idx) {
                    const auto& st = it.state();
                    double v = lead;
                    for (const auto& f : side_a)
                        v *= factor_value(model, beliefs.edge, f, xa, st[f.nbr_pos]) / den_a[xa];
                    for (const auto& f : side_b)
                        v *= factor_value(model, beliefs.edge, f, xb, st[f.nbr_pos]) / den_b[xb];
                    out[idx] = v;
                    z += v;
                }
            }
        }
    }
    if (z_out) *z_out = z;
    normalize_raw(out, z, "bethe_embedding");
    return out;
}

std::pair<BeliefSet, RunReport> run_to_convergence(Algorithm alg, const PairwiseModel& model,
                                                   const RunConfig& config) {
    check_config(config, alg);
    if (alg == Algorithm::Bp) {
        auto [m, b, rep] = run_bp_to_convergence(model, config);
        (void)m;
        return {std::move(b), std::move(rep)};
    }
    return run_beliefs(alg, model, config, nullptr);
}

std::pair<BeliefSet, RunReport> run_from(Algorithm alg, const PairwiseModel& model,
                                         const BeliefSet& initial, const RunConfig& config) {
    check_config(config, alg);
    if (alg == Algorithm::Bp)
        fail(ErrorKind::InvalidParameter, "run_from: bp iterates messages; use run_bp_to_convergence");
    return run_beliefs(alg, model, config, &initial);
}

std::tuple<MessageSet, BeliefSet, RunReport> run_bp_to_convergence(const PairwiseModel& model,
                                                                   const RunConfig& config) {
    check_config(config, Algorithm::Bp);
    Engine eng(model, Algorithm::Bp, config.clamp_epsilon);
    WsklWeights weights = WsklWeights::singleton_default(model);
    MessageSet cur = config.init == InitKind::Uniform ? init_messages(model)
                                                      : random_messages(model, config.init_seed);
    MessageSet nxt = cur;
    BeliefSet bel_cur, bel_nxt;
    eng.beliefs_of(cur, bel_cur);
    bel_nxt = bel_cur;
    RunReport rep;
    for (long iter = 1; iter <= config.max_iterations; ++iter) {
        try {
            eng.step_messages(cur, nxt);
        } catch (const Error& e) {
            rethrow_at(e, iter);
        }
        if (config.damping > 0.0) damp_tables(nxt.table, cur.table, config.damping);
        eng.beliefs_of(nxt, bel_nxt);
        if (config.record_wskl)
            rep.wskl_trace.push_back(
                weighted_kl(model, bel_cur, bel_nxt, weights, config.clamp_epsilon));
        double res = max_abs_diff(bel_cur, bel_nxt);
        rep.residual_trace.push_back(res);
        rep.iterations = iter;
        rep.final_residual = res;
        std::swap(cur, nxt);
        std::swap(bel_cur, bel_nxt);
        if (res < config.tolerance) {
            rep.converged = true;
            break;
        }
    }
    rep.clamp_events = eng.clamp_events;
    finish_report(rep);
    return {std::move(cur), std::move(bel_cur), std::move(rep)};
}

BeliefSet tail_averaged_beliefs(Algorithm alg, const PairwiseModel& model, const BeliefSet& start,
                                const RunConfig& config, int window) {
    if (window < 1) fail(ErrorKind::InvalidParameter, "tail average window must be >= 1");
    if (alg == Algorithm::Bp)
        fail(ErrorKind::InvalidParameter, "tail_averaged_beliefs: use belief-space algorithms");
    Engine eng(model, alg, config.clamp_epsilon);
    BeliefSet cur = start, nxt = start, acc = start;
    for (auto& t : acc.node) std::fill(t.begin(), t.end(), 0.0);
    for (auto& t : acc.edge) std::fill(t.begin(), t.end(), 0.0);
    for (int k = 0; k < window; ++k) {
        eng.step(cur, nxt);
        std::swap(cur, nxt);
        for (std::size_t i = 0; i < acc.node.size(); ++i)
            for (std::size_t s = 0; s < acc.node[i].size(); ++s)
                acc.node[i][s] += cur.node[i][s];
        for (std::size_t e = 0; e < acc.edge.size(); ++e)
            for (std::size_t s = 0; s < acc.edge[e].size(); ++s)
                acc.edge[e][s] += cur.edge[e][s];
    }
    for (auto& t : acc.node) normalize(t);
    for (auto& t : acc.edge) normalize(t);
    return acc;
}

double dlr_residual(const PairwiseModel& model, const BeliefSet& beliefs, NeighborhoodForm form,
                    double clamp) {
    BeliefSet image;
    switch (beliefs.level) {
        case BeliefLevel::Singleton:
            if (form != NeighborhoodForm::Product)
                fail(ErrorKind::InvalidParameter, "level-1 beliefs use the product form");
            image = fn_step(model, beliefs);
            break;
        case BeliefLevel::PairOnly:
            image = form == NeighborhoodForm::Product ? fn2_step(model, beliefs)
                                                      : cp_step(model, beliefs, clamp);
            break;
        case BeliefLevel::Pair:
            if (form != NeighborhoodForm::Bethe)
                fail(ErrorKind::InvalidParameter, "level-2 beliefs use the Bethe form");
            image = bp_dlr_step(model, beliefs, clamp);
            break;
    }
    return max_abs_diff(beliefs, image);
}

double wskl(const PairwiseModel& model, const BeliefSet& beliefs, const WsklWeights& weights,
            Algorithm alg, double clamp) {
    if (static_cast<int>(weights.alpha_singleton.size()) != model.node_count() ||
        static_cast<int>(weights.alpha_pair.size()) != model.edge_count())
        fail(ErrorKind::InvalidParameter, "wskl: weight shapes do not match the model");
    for (double a : weights.alpha_singleton)
        if (!std::isfinite(a)) fail(ErrorKind::InvalidParameter, "wskl: non-finite weight");
    for (double a : weights.alpha_pair)
        if (!std::isfinite(a)) fail(ErrorKind::InvalidParameter, "wskl: non-finite weight");
    if (alg == Algorithm::Bp) alg = Algorithm::BpDlr;
    if (beliefs.level != algorithm_level(alg))
        fail(ErrorKind::InvalidParameter, "wskl: belief level does not match the algorithm");
    BeliefSet image;
    switch (alg) {
        case Algorithm::Fn: image = fn_step(model, beliefs); break;
        case Algorithm::Fn2: image = fn2_step(model, beliefs); break;
        case Algorithm::Cp: image = cp_step(model, beliefs, clamp); break;
        case Algorithm::Mf: image = mf_step(model, beliefs); break;
        case Algorithm::Mf2: image = mf2_step(model, beliefs); break;
        default: image = bp_dlr_step(model, beliefs, clamp); break;
    }
    return weighted_kl(model, beliefs, image, weights, clamp);
}

double bethe_free_energy(const PairwiseModel& model, const BeliefSet& beliefs,
                         double consistency_tol) {
    if (beliefs.level != BeliefLevel::Pair)
        fail(ErrorKind::InvalidParameter, "bethe_free_energy: level-2 beliefs required");
    double gap = local_consistency_gap(model, beliefs);
    if (gap > consistency_tol)
        fail(ErrorKind::InconsistentBeliefs,
             "bethe_free_energy: beliefs are not locally consistent (gap " + std::to_string(gap) +
                 ")");
    double f = 0.0;
    for (int e = 0; e < model.edge_count(); ++e) {
        auto [a, b] = model.topology.edges[e];
        const int sb = model.card(b);
        for (int xa = 0; xa < model.card(a); ++xa)
            for (int xb = 0; xb < sb; ++xb) {
                double p = beliefs.edge[e][static_cast<std::size_t>(xa) * sb + xb];
                if (p <= 0.0) continue;
                double psi = model.unary[a][xa] * model.unary[b][xb] *
                             model.pairwise[e][static_cast<std::size_t>(xa) * sb + xb];
                f += p * std::log(p / psi);
            }
    }
    for (int i = 0; i < model.node_count(); ++i) {
        double deg = model.topology.degree(i);
        for (int s = 0; s < model.card(i); ++s) {
            double p = beliefs.node[i][s];
            if (p <= 0.0) continue;
            f -= (deg - 1.0) * p * std::log(p / model.unary[i][s]);
        }
    }
    return f;
}

double reparameterization_spread(const PairwiseModel& model, const BeliefSet& beliefs,
                                 double clamp) {
    if (beliefs.level != BeliefLevel::Pair)
        fail(ErrorKind::InvalidParameter, "reparameterization_spread: level-2 beliefs required");
    if (model.node_count() > 14)
        fail(ErrorKind::UnsupportedSize, "reparameterization_spread: model exceeds 14 nodes");
    auto bl = beliefs;
    for (auto& t : bl.node)
        for (double& v : t) v = v < clamp ? clamp : v;
    for (auto& t : bl.edge)
        for (double& v : t) v = v < clamp ? clamp : v;

    double lo = kInf, hi = -kInf;
    for (StateIterator it(model.cardinalities); !it.done(); it.advance()) {
        const auto& x = it.state();
        double lw = log_weight(model, x);
        if (lw == -kInf) continue;  // zero-probability configurations carry no constraint
        double r = -lw;
        for (int e = 0; e < model.edge_count(); ++e) {
            auto [a, b] = model.topology.edges[e];
            r += std::log(bl.edge[e][static_cast<std::size_t>(x[a]) * model.card(b) + x[b]]);
        }
        for (int i = 0; i < model.node_count(); ++i)
            r -= (model.topology.degree(i) - 1.0) * std::log(bl.node[i][x[i]]);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    if (!std::isfinite(lo) || !std::isfinite(hi))
        fail(ErrorKind::DiagnosticFailure, "reparameterization_spread: no admissible configuration");
    return std::expm1(hi - lo);
}

}  // namespace dlr
