#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "oversmooth/graph.hpp"

namespace oversmooth {

struct EdgeListStats {
  std::size_t data_lines = 0;
  std::size_t skipped_lines = 0;  // comments and blanks
  std::size_t duplicates = 0;     // includes reversed repeats
  std::size_t self_loops = 0;
  // original_ids[v] is the id vertex v carried in the file (first-seen order).
  std::vector<std::uint64_t> original_ids;
};

struct LoadedGraph {
  Graph graph;
  EdgeListStats stats;
};

// Whitespace-separated "u v" lines; `#` lines and blanks are skipped, ids are
// densified in first-seen order, self-loops and duplicates are dropped.
// Throws kParseError with the 1-based line number, kEmptyAfterFilter when
// no edge survives, kIo when the file cannot be opened.
LoadedGraph parse_edge_list(std::istream& in);
LoadedGraph load_edge_list(const std::string& path);

// One "u v" line per canonical edge.
void write_edge_list(std::ostream& out, const Graph& g);

Graph complete_graph(std::size_t n);
Graph cycle_graph(std::size_t n);

// G(n, p) redrawn until connected (up to 100 seeds), then a triangle on two
// new vertices hung off vertex 0. Throws kDisconnectedAfterRetries.
Graph erdos_renyi_patched(std::size_t n, double p, std::uint64_t seed);

// Stochastic block model with the same retry and triangle patch.
Graph sbm_patched(const std::vector<std::size_t>& sizes, double p_in,
                  double p_out, std::uint64_t seed);

// `base` plus one new vertex joined to vertex 0.
Graph with_pendant(const Graph& base);

// Generator spec strings:
//   complete:N | cycle:N | er:N:P:SEED | sbm:S1,S2,...:PIN:POUT:SEED |
//   pendant:<spec>
// The er and sbm results are checked to be primitive. Throws kConfig on a
// malformed spec.
Graph generate(const std::string& spec);

}  // namespace oversmooth
