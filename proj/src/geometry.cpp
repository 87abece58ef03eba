#include "noisynet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "noisynet/errors.hpp"

namespace noisynet {

std::size_t SpanningTree::max_depth() const {
  return depth.empty() ? 0 : *std::max_element(depth.begin(), depth.end());
}

std::size_t SpanningTree::degree(CellId c) const {
  return children[c].size() + (parent[c] == kNoCell ? 0 : 1);
}

std::vector<Point> sample_positions(std::size_t n, Rng& rng) {
  std::vector<Point> out(n);
  for (auto& p : out) {
    p.x = rng.uniform();
    p.y = rng.uniform();
  }
  return out;
}

NetworkInstance place_nodes(std::size_t n, Rng& rng, std::uint64_t seed_tag) {
  if (n < 2) throw std::invalid_argument("place_nodes: n must be at least 2");
  NetworkInstance inst;
  inst.n = n;
  inst.seed = seed_tag;
  inst.positions = sample_positions(n, rng);
  inst.bits.assign(n, 0);
  return inst;
}

NetworkInstance place_nodes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return place_nodes(n, rng, seed);
}

std::size_t log2_ceil(std::size_t v) {
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < v) ++bits;
  return bits;
}

std::size_t smallest_odd_at_least(double v) {
  auto k = static_cast<std::size_t>(std::ceil(v));
  if (k < 1) k = 1;
  if (k % 2 == 0) ++k;
  return k;
}

DerivedParams derive_params(std::size_t n, double delta) {
  if (n < 3) throw std::invalid_argument("derive_params: n must be at least 3");
  if (!(delta >= 0.0)) throw std::invalid_argument("derive_params: delta must be nonnegative");
  const double ln_n = std::log(static_cast<double>(n));
  DerivedParams p;
  p.n = n;
  p.delta = delta;
  p.m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n) / (2.75 * ln_n))));
  p.l = 1.0 / static_cast<double>(p.m);
  p.cells = p.m * p.m;
  p.radius = std::sqrt(13.75 * ln_n / static_cast<double>(n));
  const auto span = static_cast<std::size_t>(std::ceil(p.guard_radius() / p.l));
  p.reuse = 2 * span + 1;
  p.k1 = p.reuse * p.reuse - 1;
  p.k5 = 4 * (p.k1 + 1);
  return p;
}

std::size_t column_of(double x, std::size_t m) {
  const auto c = static_cast<std::size_t>(std::floor(x * static_cast<double>(m)));
  return std::min(c, m - 1);
}

std::size_t row_of(double y, std::size_t m) {
  const auto from_bottom = std::min(static_cast<std::size_t>(std::floor(y * static_cast<double>(m))), m - 1);
  return m - 1 - from_bottom;
}

NodeId select_sink(std::span<const Point> positions) {
  const Point mid{0.5, 0.5};
  NodeId best = kNoNode;
  double best_d = std::numeric_limits<double>::infinity();
  for (NodeId i = 0; i < positions.size(); ++i) {
    const double d = distance(positions[i], mid);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

std::vector<Cell> partition_cells(const NetworkInstance& instance, const DerivedParams& params) {
  const std::size_t m = params.m;
  std::vector<Cell> cells(params.cells);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      auto& cell = cells[cell_index(r, c, m)];
      cell.id = cell_index(r, c, m);
      cell.row = r;
      cell.col = c;
    }
  }
  for (NodeId i = 0; i < instance.positions.size(); ++i) {
    const auto& p = instance.positions[i];
    cells[cell_index(row_of(p.y, m), column_of(p.x, m), m)].members.push_back(i);
  }
  const NodeId sink = select_sink(instance.positions);
  for (auto& cell : cells) {
    if (!cell.empty()) cell.center = cell.members.front();
  }
  if (sink != kNoNode) {
    const auto& p = instance.positions[sink];
    auto& sink_cell = cells[cell_index(row_of(p.y, m), column_of(p.x, m), m)];
    sink_cell.center = sink;
    sink_cell.sink = true;
  }
  return cells;
}

std::vector<Cell> assign_cells(const NetworkInstance& instance, const DerivedParams& params) {
  auto cells = partition_cells(instance, params);
  for (const auto& cell : cells) {
    if (cell.empty()) {
      std::ostringstream msg;
      msg << "cell " << cell.id << " (row " << cell.row << ", col " << cell.col << ") is empty";
      throw InfeasibleError(msg.str());
    }
  }
  return cells;
}

SpanningTree build_tree(std::size_t m, CellId sink_cell, NodeId sink_node) {
  SpanningTree tree;
  tree.m = m;
  tree.sink_cell = sink_cell;
  tree.sink_node = sink_node;
  tree.parent.assign(m * m, kNoCell);
  tree.depth.assign(m * m, 0);
  tree.children.assign(m * m, {});
  const std::size_t sr = sink_cell / m;
  const std::size_t sc = sink_cell % m;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const CellId j = cell_index(r, c, m);
      if (c != sc) {
        tree.parent[j] = cell_index(r, c < sc ? c + 1 : c - 1, m);
      } else if (r != sr) {
        tree.parent[j] = cell_index(r < sr ? r + 1 : r - 1, c, m);
      }
      tree.depth[j] = (c > sc ? c - sc : sc - c) + (r > sr ? r - sr : sr - r);
      if (tree.parent[j] != kNoCell) tree.children[tree.parent[j]].push_back(j);
    }
  }
  return tree;
}

SpanningTree build_tree(std::span<const Cell> cells, const DerivedParams& params) {
  for (const auto& cell : cells) {
    if (cell.sink) return build_tree(params.m, cell.id, cell.center);
  }
  throw std::invalid_argument("build_tree: no sink cell marked");
}

GeometryReport validate_geometry(std::span<const Cell> cells,
                                 const SpanningTree& tree,
                                 const NetworkInstance& instance,
                                 const DerivedParams& params) {
  GeometryReport rep;
  const double ln_n = std::log(static_cast<double>(std::max<std::size_t>(instance.n, 2)));
  rep.occupancy_lower = 0.091 * ln_n;
  rep.occupancy_upper = 5.41 * ln_n;
  rep.min_occupancy = std::numeric_limits<std::size_t>::max();
  for (const auto& cell : cells) {
    if (cell.empty()) {
      rep.feasible = false;
      rep.empty_cells.push_back(cell.id);
    }
    rep.min_occupancy = std::min(rep.min_occupancy, cell.size());
    rep.max_occupancy = std::max(rep.max_occupancy, cell.size());
    const auto sz = static_cast<double>(cell.size());
    if (sz < rep.occupancy_lower || sz > rep.occupancy_upper) rep.occupancy_within_bounds = false;
  }
  if (cells.empty()) rep.min_occupancy = 0;

  const std::size_t m = params.m;
  if (tree.parent.size() != cells.size()) {
    rep.tree_ok = false;
    return rep;
  }
  std::size_t edges = 0;
  for (CellId j = 0; j < cells.size(); ++j) {
    rep.max_degree = std::max(rep.max_degree, tree.degree(j));
    rep.max_depth = std::max(rep.max_depth, tree.depth[j]);
    const CellId p = tree.parent[j];
    if (p == kNoCell) {
      if (j != tree.sink_cell) rep.tree_ok = false;
      continue;
    }
    ++edges;
    const std::size_t dr = cells[j].row > cells[p].row ? cells[j].row - cells[p].row : cells[p].row - cells[j].row;
    const std::size_t dc = cells[j].col > cells[p].col ? cells[j].col - cells[p].col : cells[p].col - cells[j].col;
    if (dr + dc != 1) rep.tree_ok = false;
    if (tree.depth[j] != tree.depth[p] + 1) rep.tree_ok = false;
    if (cells[j].center != kNoNode && cells[p].center != kNoNode) {
      const double d = distance(instance.positions[cells[j].center], instance.positions[cells[p].center]);
      rep.max_edge_distance = std::max(rep.max_edge_distance, d);
      if (d > params.radius) rep.edges_within_radius = false;
    }
  }
  // Every cell must reach the sink; depth strictly decreasing along parent
  // links (checked above) rules out cycles.
  if (edges + 1 != cells.size()) rep.tree_ok = false;
  if (m > 0 && rep.max_depth > 2 * (m - 1)) rep.tree_ok = false;
  return rep;
}

std::string GeometryReport::summary() const {
  std::ostringstream out;
  out << "feasible=" << (feasible ? "yes" : "no");
  if (!empty_cells.empty()) out << " empty_cells=" << empty_cells.size() << " (first " << empty_cells.front() << ")";
  out << " occupancy=[" << min_occupancy << "," << max_occupancy << "] bounds=[" << occupancy_lower << ","
      << occupancy_upper << "] max_edge=" << max_edge_distance << " max_degree=" << max_degree
      << " max_depth=" << max_depth << " tree=" << (tree_ok ? "ok" : "bad");
  return out.str();
}

}  // namespace noisynet
