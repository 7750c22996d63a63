#include "oversmooth/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "oversmooth/error.hpp"

namespace oversmooth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIsolatedVertex: return "IsolatedVertex";
    case ErrorCode::kNotPrimitive: return "NotPrimitive";
    case ErrorCode::kEmptyGraph: return "EmptyGraph";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kZeroInput: return "ZeroInput";
    case ErrorCode::kDegenerateProduct: return "DegenerateProduct";
    case ErrorCode::kInvalidDim: return "InvalidDim";
    case ErrorCode::kStepTooLarge: return "StepTooLarge";
    case ErrorCode::kWindowTooShort: return "WindowTooShort";
    case ErrorCode::kAllTruncated: return "AllTruncated";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kEmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::kDisconnectedAfterRetries: return "DisconnectedAfterRetries";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kConfig: return "Config";
  }
  return "Unknown";
}

namespace {

Edge canonical(Vertex u, Vertex v) { return u <= v ? Edge{u, v} : Edge{v, u}; }

}  // namespace

Graph::Graph(std::size_t n, std::vector<Edge> edges) : n_(n) {
  for (auto& e : edges) {
    if (e.first >= n || e.second >= n) {
      throw Error(ErrorCode::kInvalidArgument,
                  "edge (" + std::to_string(e.first) + "," +
                      std::to_string(e.second) + ") has an endpoint >= n=" +
                      std::to_string(n));
    }
    e = canonical(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
}

bool Graph::add_edge(Vertex u, Vertex v) {
  if (u >= n_ || v >= n_) {
    throw Error(ErrorCode::kInvalidArgument, "edge endpoint out of range");
  }
  const Edge e = canonical(u, v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
  if (it != edges_.end() && *it == e) return false;
  edges_.insert(it, e);
  return true;
}

bool Graph::has_edge(Vertex u, Vertex v) const {
  return std::binary_search(edges_.begin(), edges_.end(), canonical(u, v));
}

std::vector<std::size_t> Graph::degrees() const {
  std::vector<std::size_t> deg(n_, 0);
  for (const auto& [u, v] : edges_) {
    ++deg[u];
    if (u != v) ++deg[v];
  }
  return deg;
}

std::vector<std::vector<Vertex>> Graph::adjacency() const {
  std::vector<std::vector<Vertex>> adj(n_);
  for (const auto& [u, v] : edges_) {
    adj[u].push_back(v);
    if (u != v) adj[v].push_back(u);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

std::vector<std::size_t> connected_components(const Graph& g,
                                              std::size_t* count) {
  const std::size_t n = g.num_vertices();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& [u, v] : g.edges()) {
    std::size_t a = find(u), b = find(v);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    parent[b] = a;  // root is always the smallest id
  }
  std::vector<std::size_t> label(n, n), root_label(n, n);
  std::size_t next = 0;
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t r = find(v);
    if (root_label[r] == n) root_label[r] = next++;
    label[v] = root_label[r];
  }
  if (count) *count = next;
  return label;
}

Component largest_connected_component(const Graph& g) {
  const std::size_t n = g.num_vertices();
  if (n == 0) throw Error(ErrorCode::kEmptyGraph, "graph has no vertices");
  std::size_t k = 0;
  const auto label = connected_components(g, &k);
  std::vector<std::size_t> size(k, 0);
  for (auto l : label) ++size[l];
  // Labels are ordered by smallest member, so the first maximum wins ties.
  const std::size_t best =
      std::max_element(size.begin(), size.end()) - size.begin();

  Component out;
  std::vector<Vertex> new_id(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (label[v] == best) {
      new_id[v] = static_cast<Vertex>(out.relabel.size());
      out.relabel.push_back(static_cast<Vertex>(v));
    }
  }
  std::vector<Edge> edges;
  for (const auto& [u, v] : g.edges()) {
    if (label[u] == best) edges.emplace_back(new_id[u], new_id[v]);
  }
  out.graph = Graph(out.relabel.size(), std::move(edges));
  return out;
}

bool is_connected(const Graph& g) {
  std::size_t k = 0;
  connected_components(g, &k);
  return k <= 1;
}

}  // namespace oversmooth
