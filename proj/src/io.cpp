#include "oversmooth/io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "oversmooth/error.hpp"
#include "oversmooth/rng.hpp"
#include "oversmooth/transition.hpp"

namespace oversmooth {

namespace {

bool parse_id(std::string_view tok, std::uint64_t& out) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) toks.push_back(line.substr(i, j - i));
    i = j;
  }
  return toks;
}

constexpr int kMaxReseeds = 100;

void require_primitive(const Graph& g, const std::string& what) {
  std::vector<std::vector<Vertex>> out = g.adjacency();
  if (!check_primitivity(out).primitive) {
    throw Error(ErrorCode::kNotPrimitive, what + " is not primitive");
  }
}

Graph attach_triangle(Graph g) {
  const auto n = static_cast<Vertex>(g.num_vertices());
  Graph out(n + 2, g.edges());
  out.add_edge(0, n);
  out.add_edge(0, n + 1);
  out.add_edge(n, n + 1);
  return out;
}

template <class Draw>
Graph connected_draw(std::uint64_t seed, const std::string& what, Draw draw) {
  for (int attempt = 0; attempt < kMaxReseeds; ++attempt) {
    CounterRng rng(seed, StreamDomain::kGraph, static_cast<std::uint64_t>(attempt), 0);
    Graph g = draw(rng);
    if (is_connected(g)) {
      Graph patched = attach_triangle(std::move(g));
      require_primitive(patched, what);
      return patched;
    }
  }
  throw Error(ErrorCode::kDisconnectedAfterRetries,
              what + " stayed disconnected after 100 reseeds");
}

[[noreturn]] void bad_spec(const std::string& spec) {
  throw Error(ErrorCode::kConfig, "bad graph spec '" + spec + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

std::size_t to_count(const std::string& s, const std::string& spec) {
  std::uint64_t v = 0;
  if (!parse_id(s, v) || v == 0) bad_spec(spec);
  return static_cast<std::size_t>(v);
}

double to_prob(const std::string& s, const std::string& spec) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_spec(spec);
  return v;
}

}  // namespace

LoadedGraph parse_edge_list(std::istream& in) {
  LoadedGraph out;
  auto& st = out.stats;
  std::unordered_map<std::uint64_t, Vertex> dense;
  std::vector<Edge> edges;
  std::set<Edge> seen;
  auto id_of = [&](std::uint64_t raw) {
    auto [it, inserted] = dense.emplace(raw, static_cast<Vertex>(dense.size()));
    if (inserted) st.original_ids.push_back(raw);
    return it->second;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = split_ws(line);
    if (toks.empty() || toks.front().front() == '#') {
      ++st.skipped_lines;
      continue;
    }
    std::uint64_t a = 0, b = 0;
    if (toks.size() != 2 || !parse_id(toks[0], a) || !parse_id(toks[1], b)) {
      throw Error(ErrorCode::kParseError,
                  "line " + std::to_string(lineno) + ": expected two nonnegative integers");
    }
    ++st.data_lines;
    const Vertex u = id_of(a);
    const Vertex v = id_of(b);
    if (u == v) {
      ++st.self_loops;
      continue;
    }
    const Edge e = std::minmax(u, v);
    if (!seen.insert(e).second) {
      ++st.duplicates;
      continue;
    }
    edges.push_back(e);
  }
  if (edges.empty()) {
    throw Error(ErrorCode::kEmptyAfterFilter, "no edges left after filtering");
  }
  out.graph = Graph(dense.size(), std::move(edges));
  return out;
}

LoadedGraph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return parse_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

Graph complete_graph(std::size_t n) {
  Graph g(n);
  for (Vertex u = 0; u < n; ++u) {
    for (Vertex v = u + 1; v < n; ++v) g.add_edge(u, v);
  }
  return g;
}

Graph cycle_graph(std::size_t n) {
  if (n < 3) throw Error(ErrorCode::kInvalidArgument, "cycle needs n >= 3");
  Graph g(n);
  for (Vertex u = 0; u < n; ++u) g.add_edge(u, static_cast<Vertex>((u + 1) % n));
  return g;
}

Graph erdos_renyi_patched(std::size_t n, double p, std::uint64_t seed) {
  if (n == 0 || !(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "need n > 0 and p in (0, 1)");
  }
  return connected_draw(seed, "erdos_renyi", [&](CounterRng& rng) {
    std::bernoulli_distribution coin(p);
    Graph g(n);
    for (Vertex u = 0; u < n; ++u) {
      for (Vertex v = u + 1; v < n; ++v) {
        if (coin(rng)) g.add_edge(u, v);
      }
    }
    return g;
  });
}

Graph sbm_patched(const std::vector<std::size_t>& sizes, double p_in,
                  double p_out, std::uint64_t seed) {
  if (sizes.empty() || !(p_in > 0.0 && p_in < 1.0) ||
      !(p_out > 0.0 && p_out < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "need blocks and p in (0, 1)");
  }
  std::vector<std::size_t> block;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    if (sizes[b] == 0) throw Error(ErrorCode::kInvalidArgument, "empty block");
    block.insert(block.end(), sizes[b], b);
  }
  return connected_draw(seed, "sbm", [&](CounterRng& rng) {
    std::bernoulli_distribution in(p_in), out(p_out);
    Graph g(block.size());
    for (Vertex u = 0; u < block.size(); ++u) {
      for (Vertex v = u + 1; v < block.size(); ++v) {
        if (block[u] == block[v] ? in(rng) : out(rng)) g.add_edge(u, v);
      }
    }
    return g;
  });
}

Graph with_pendant(const Graph& base) {
  if (base.num_vertices() == 0) throw Error(ErrorCode::kEmptyGraph, "empty base");
  const auto n = static_cast<Vertex>(base.num_vertices());
  Graph g(n + 1, base.edges());
  g.add_edge(0, n);
  return g;
}

Graph generate(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) bad_spec(spec);
  const std::string head = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (head == "pendant") return with_pendant(generate(rest));
  const auto parts = split(rest, ':');
  if (head == "complete" && parts.size() == 1) {
    return complete_graph(to_count(parts[0], spec));
  }
  if (head == "cycle" && parts.size() == 1) {
    const std::size_t n = to_count(parts[0], spec);
    if (n < 3) bad_spec(spec);
    return cycle_graph(n);
  }
  if (head == "er" && parts.size() == 3) {
    std::uint64_t seed = 0;
    if (!parse_id(parts[2], seed)) bad_spec(spec);
    return erdos_renyi_patched(to_count(parts[0], spec), to_prob(parts[1], spec), seed);
  }
  if (head == "sbm" && parts.size() == 4) {
    std::vector<std::size_t> sizes;
    for (const auto& s : split(parts[0], ',')) sizes.push_back(to_count(s, spec));
    std::uint64_t seed = 0;
    if (!parse_id(parts[3], seed)) bad_spec(spec);
    return sbm_patched(sizes, to_prob(parts[1], spec), to_prob(parts[2], spec), seed);
  }
  bad_spec(spec);
}

}  // namespace oversmooth
