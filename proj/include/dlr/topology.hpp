#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace dlr {

using NodeId = int;

// Undirected graph with a fixed edge order. Edges keep their construction
// orientation (first, second); potential tables are indexed the same way.
struct Topology {
    int node_count = 0;
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<std::vector<NodeId>> adjacency;  // sorted neighbor lists

    int degree(NodeId i) const { return static_cast<int>(adjacency[i].size()); }
    int edge_count() const { return static_cast<int>(edges.size()); }

    // Index into `edges` for the unordered pair {i, j}, or -1.
    int edge_index(NodeId i, NodeId j) const;

    bool has_edge(NodeId i, NodeId j) const { return edge_index(i, j) >= 0; }
};

// Builds a topology from an edge list, validating: indices in range, no
// self-loops, no duplicate (unordered) edges.
Topology make_topology(int node_count, std::vector<std::pair<NodeId, NodeId>> edges);

// rows x cols grid with periodic boundary conditions; every node has degree 4.
// Dimensions below 3 would create duplicate edges and are rejected.
Topology torus_grid(int rows, int cols);

// Path 0-1-...-(n-1).
Topology chain(int n);

// Node 0 joined to 1..n-1.
Topology star(int n);

}  // namespace dlr
