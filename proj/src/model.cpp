#include "dlr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dlr/error.hpp"
#include "dlr/rng.hpp"
#include "dlr/states.hpp"

namespace dlr {

bool PairwiseModel::is_binary() const {
    return std::all_of(cardinalities.begin(), cardinalities.end(), [](int c) { return c == 2; });
}

void validate_model(const PairwiseModel& model) {
    const int n = model.topology.node_count;
    if (static_cast<int>(model.cardinalities.size()) != n)
        fail(ErrorKind::InvalidParameter, "cardinalities: expected one entry per node");
    for (int i = 0; i < n; ++i)
        if (model.cardinalities[i] < 2)
            fail(ErrorKind::InvalidParameter, "nodes[" + std::to_string(i) + "]: cardinality < 2");
    if (static_cast<int>(model.unary.size()) != n)
        fail(ErrorKind::InvalidParameter, "unary: expected one table per node");
    for (int i = 0; i < n; ++i) {
        const auto& t = model.unary[i];
        if (static_cast<int>(t.size()) != model.cardinalities[i])
            fail(ErrorKind::InvalidParameter, "unary[" + std::to_string(i) + "]: wrong table size");
        double best = 0.0;
        for (std::size_t s = 0; s < t.size(); ++s) {
            if (!(t[s] >= 0.0) || !std::isfinite(t[s]))
                fail(ErrorKind::InvalidParameter,
                     "unary[" + std::to_string(i) + "][" + std::to_string(s) + "]: not a finite nonnegative value");
            best = std::max(best, t[s]);
        }
        if (best <= 0.0)
            fail(ErrorKind::InvalidParameter, "unary[" + std::to_string(i) + "]: all entries zero");
    }
    if (model.pairwise.size() != model.topology.edges.size())
        fail(ErrorKind::InvalidParameter, "pairwise: expected one table per edge");
    for (int e = 0; e < model.edge_count(); ++e) {
        auto [a, b] = model.topology.edges[e];
        const auto& t = model.pairwise[e];
        if (static_cast<int>(t.size()) != model.cardinalities[a] * model.cardinalities[b])
            fail(ErrorKind::InvalidParameter, "edges[" + std::to_string(e) + "]: wrong table size");
        double best = 0.0;
        for (std::size_t s = 0; s < t.size(); ++s) {
            if (!(t[s] >= 0.0) || !std::isfinite(t[s]))
                fail(ErrorKind::InvalidParameter,
                     "edges[" + std::to_string(e) + "].table[" + std::to_string(s) + "]: not a finite nonnegative value");
            best = std::max(best, t[s]);
        }
        if (best <= 0.0)
            fail(ErrorKind::InvalidParameter, "edges[" + std::to_string(e) + "]: all entries zero");
    }
}

PairwiseModel uniform_model(const Topology& topology, int card) {
    PairwiseModel m;
    m.topology = topology;
    m.cardinalities.assign(topology.node_count, card);
    m.unary.assign(topology.node_count, std::vector<double>(card, 1.0));
    for (auto [a, b] : topology.edges)
        m.pairwise.emplace_back(std::vector<double>(static_cast<std::size_t>(card) * card, 1.0));
    validate_model(m);
    return m;
}

PairwiseModel build_ising(const IsingParams& params) {
    const auto& topo = params.topology;
    if (static_cast<int>(params.phi.size()) != topo.node_count)
        fail(ErrorKind::InvalidParameter, "phi: expected one field per node");
    if (params.theta.size() != topo.edges.size())
        fail(ErrorKind::InvalidParameter, "theta: expected one coupling per edge");
    for (double v : params.phi)
        if (!std::isfinite(v)) fail(ErrorKind::InvalidParameter, "phi: non-finite entry");
    for (double v : params.theta)
        if (!std::isfinite(v)) fail(ErrorKind::InvalidParameter, "theta: non-finite entry");

    PairwiseModel m;
    m.topology = topo;
    m.cardinalities.assign(topo.node_count, 2);
    m.unary.resize(topo.node_count);
    for (int i = 0; i < topo.node_count; ++i) m.unary[i] = {1.0, std::exp(params.phi[i])};
    m.pairwise.resize(topo.edges.size());
    for (std::size_t e = 0; e < topo.edges.size(); ++e)
        m.pairwise[e] = {1.0, 1.0, 1.0, std::exp(params.theta[e])};
    m.ising = params;
    validate_model(m);
    return m;
}

std::vector<NodeId> neighborhood(const Topology& topology, const Region& region) {
    auto check = [&](NodeId v) {
        if (v < 0 || v >= topology.node_count)
            fail(ErrorKind::InvalidRegion, "region node " + std::to_string(v) + " out of range");
    };
    check(region.a);
    if (region.is_edge()) {
        check(region.b);
        if (!topology.has_edge(region.a, region.b))
            fail(ErrorKind::InvalidRegion, "region pair is not an edge of the topology");
    }
    std::vector<NodeId> out;
    for (NodeId v : topology.adjacency[region.a])
        if (v != region.b) out.push_back(v);
    if (region.is_edge())
        for (NodeId v : topology.adjacency[region.b])
            if (v != region.a) out.push_back(v);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> local_conditional(const PairwiseModel& model, const Region& region,
                                      const std::vector<int>& boundary) {
    const auto& topo = model.topology;
    const auto nbrs = neighborhood(topo, region);
    if (boundary.size() != nbrs.size())
        fail(ErrorKind::InvalidConfig, "boundary: expected one state per neighborhood node");
    for (std::size_t k = 0; k < nbrs.size(); ++k)
        if (boundary[k] < 0 || boundary[k] >= model.card(nbrs[k]))
            fail(ErrorKind::InvalidConfig,
                 "boundary state for node " + std::to_string(nbrs[k]) + " out of range");

    auto boundary_state = [&](NodeId v) {
        auto it = std::lower_bound(nbrs.begin(), nbrs.end(), v);
        return boundary[static_cast<std::size_t>(it - nbrs.begin())];
    };
    auto log_of = [](double v) {
        return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    };

    const int ca = model.card(region.a);
    const int cb = region.is_edge() ? model.card(region.b) : 1;
    std::vector<double> logw(static_cast<std::size_t>(ca) * cb, 0.0);
    for (int xa = 0; xa < ca; ++xa) {
        for (int xb = 0; xb < cb; ++xb) {
            double acc = log_of(model.unary[region.a][xa]);
            if (region.is_edge()) acc += log_of(model.unary[region.b][xb]);
            for (int e = 0; e < model.edge_count(); ++e) {
                auto [u, v] = topo.edges[e];
                bool ua = (u == region.a), ub = (u == region.b);
                bool va = (v == region.a), vb = (v == region.b);
                if (!ua && !ub && !va && !vb) continue;
                int xu = ua ? xa : (ub ? xb : boundary_state(u));
                int xv = va ? xa : (vb ? xb : boundary_state(v));
                acc += log_of(model.pairwise[e][static_cast<std::size_t>(xu) * model.card(v) + xv]);
            }
            logw[static_cast<std::size_t>(xa) * cb + xb] = acc;
        }
    }

    double mx = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(mx))
        fail(ErrorKind::DegenerateConditional,
             "local_conditional: all-zero unnormalized table at region {" +
                 std::to_string(region.a) +
                 (region.is_edge() ? "," + std::to_string(region.b) : "") + "}");
    std::vector<double> out(logw.size());
    double sum = 0.0;
    for (std::size_t s = 0; s < logw.size(); ++s) {
        out[s] = std::exp(logw[s] - mx);
        sum += out[s];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::vector<double> centering_shift(const Topology& topology, const std::vector<double>& theta) {
    std::vector<double> shift(topology.node_count, 0.0);
    for (std::size_t e = 0; e < topology.edges.size(); ++e) {
        shift[topology.edges[e].first] -= 0.5 * theta[e];
        shift[topology.edges[e].second] -= 0.5 * theta[e];
    }
    return shift;
}

IsingParams random_ising_instance(const InstanceConfig& cfg) {
    if (cfg.rows < 3 || cfg.cols < 3)
        fail(ErrorKind::InvalidDimension, "instance grid dimensions must be >= 3");
    if (!(cfg.var_theta > 0.0) || !(cfg.var_phi > 0.0))
        fail(ErrorKind::InvalidParameter, "instance variances must be > 0");

    IsingParams p;
    p.topology = torus_grid(cfg.rows, cfg.cols);
    Rng rng(cfg.seed);
    const double sd_theta = std::sqrt(cfg.var_theta);
    const double sd_phi = std::sqrt(cfg.var_phi);
    p.theta.resize(p.topology.edges.size());
    for (double& t : p.theta) t = sd_theta * rng.gaussian();
    p.phi = centering_shift(p.topology, p.theta);
    for (double& f : p.phi) f += sd_phi * rng.gaussian();
    return p;
}

}  // namespace dlr
