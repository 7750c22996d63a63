#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace oversmooth {

using Vertex = std::uint32_t;
using Edge = std::pair<Vertex, Vertex>;

// Undirected simple graph. Edges are stored canonically (u <= v), sorted and
// without duplicates. Self-loops are allowed only when added explicitly.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n) : n_(n) {}
  // Throws kInvalidArgument on an endpoint >= n. Duplicates are merged.
  Graph(std::size_t n, std::vector<Edge> edges);

  std::size_t num_vertices() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  // Returns false if the edge was already present.
  bool add_edge(Vertex u, Vertex v);
  bool has_edge(Vertex u, Vertex v) const;

  std::vector<std::size_t> degrees() const;
  // Neighbor lists, sorted. A self-loop lists the vertex once.
  std::vector<std::vector<Vertex>> adjacency() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
};

struct Component {
  Graph graph;
  // relabel[new_id] = original id.
  std::vector<Vertex> relabel;
};

// Connected component labels in 0..k-1, numbered by smallest member id.
std::vector<std::size_t> connected_components(const Graph& g,
                                              std::size_t* count = nullptr);

// Induced subgraph on the largest component; ties go to the component holding
// the smallest vertex id. Throws kEmptyGraph when n == 0.
Component largest_connected_component(const Graph& g);

bool is_connected(const Graph& g);

}  // namespace oversmooth
