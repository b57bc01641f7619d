#include "dlr/topology.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "dlr/error.hpp"

namespace dlr {

int Topology::edge_index(NodeId i, NodeId j) const {
    for (int e = 0; e < edge_count(); ++e) {
        auto [a, b] = edges[e];
        if ((a == i && b == j) || (a == j && b == i)) return e;
    }
    return -1;
}

Topology make_topology(int node_count, std::vector<std::pair<NodeId, NodeId>> edges) {
    if (node_count < 1) fail(ErrorKind::InvalidDimension, "node_count must be >= 1");
    std::set<std::pair<NodeId, NodeId>> seen;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        auto [a, b] = edges[e];
        if (a < 0 || a >= node_count || b < 0 || b >= node_count)
            fail(ErrorKind::InvalidDimension,
                 "edges[" + std::to_string(e) + "]: node index out of range");
        if (a == b)
            fail(ErrorKind::InvalidDimension, "edges[" + std::to_string(e) + "]: self-loop");
        auto key = std::minmax(a, b);
        if (!seen.insert(key).second)
            fail(ErrorKind::InvalidDimension, "edges[" + std::to_string(e) + "]: duplicate edge");
    }
    Topology t;
    t.node_count = node_count;
    t.edges = std::move(edges);
    t.adjacency.assign(node_count, {});
    for (auto [a, b] : t.edges) {
        t.adjacency[a].push_back(b);
        t.adjacency[b].push_back(a);
    }
    for (auto& nbrs : t.adjacency) std::sort(nbrs.begin(), nbrs.end());
    return t;
}

Topology torus_grid(int rows, int cols) {
    if (rows < 3 || cols < 3)
        fail(ErrorKind::InvalidDimension, "torus_grid: dimensions must be >= 3");
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(static_cast<std::size_t>(2 * rows * cols));
    auto id = [cols](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            edges.emplace_back(id(r, c), id(r, (c + 1) % cols));
            edges.emplace_back(id(r, c), id((r + 1) % rows, c));
        }
    }
    return make_topology(rows * cols, std::move(edges));
}

Topology chain(int n) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
    return make_topology(n, std::move(edges));
}

Topology star(int n) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
    return make_topology(n, std::move(edges));
}

}  // namespace dlr
