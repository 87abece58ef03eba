#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "noisynet/rng.hpp"

namespace noisynet {

using NodeId = std::uint32_t;
using CellId = std::uint32_t;  // 0-based, row-major with row 0 at the top

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr CellId kNoCell = std::numeric_limits<CellId>::max();

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

struct NetworkInstance {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<Point> positions;
  std::vector<std::uint8_t> bits;  // x_i in {0,1}
};

struct DerivedParams {
  std::size_t n = 0;
  double delta = 0.0;  // interference guard factor
  std::size_t m = 0;   // cells per side
  double l = 0.0;      // cell side, 1/m
  std::size_t cells = 0;  // m*m
  double radius = 0.0;    // transmission radius r_n
  std::size_t reuse = 0;  // D = 2*ceil((1+delta) r_n / l) + 1
  std::size_t k1 = 0;     // D^2 - 1
  std::size_t k5 = 0;     // 4 (k1 + 1)

  double guard_radius() const { return (1.0 + delta) * radius; }
};

struct Cell {
  CellId id = kNoCell;
  std::size_t row = 0;
  std::size_t col = 0;
  std::vector<NodeId> members;  // ascending
  NodeId center = kNoNode;
  bool sink = false;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
};

struct SpanningTree {
  std::size_t m = 0;
  CellId sink_cell = kNoCell;
  NodeId sink_node = kNoNode;
  std::vector<CellId> parent;  // kNoCell for the sink
  std::vector<std::size_t> depth;
  std::vector<std::vector<CellId>> children;

  std::size_t max_depth() const;
  std::size_t degree(CellId c) const;
};

/// Draws n i.i.d. uniform points from the stream; n >= 1.
std::vector<Point> sample_positions(std::size_t n, Rng& rng);

/// n >= 2. Bits are all zero; the caller fills them.
NetworkInstance place_nodes(std::size_t n, std::uint64_t seed);
NetworkInstance place_nodes(std::size_t n, Rng& rng, std::uint64_t seed_tag = 0);

DerivedParams derive_params(std::size_t n, double delta);

std::size_t log2_ceil(std::size_t v);
std::size_t smallest_odd_at_least(double v);

/// Grid coordinate of a point under the half-open convention; the last row
/// and column are closed.
std::size_t column_of(double x, std::size_t m);
std::size_t row_of(double y, std::size_t m);
inline CellId cell_index(std::size_t row, std::size_t col, std::size_t m) {
  return static_cast<CellId>(row * m + col);
}

/// Node nearest to (0.5, 0.5), ties by lower id.
NodeId select_sink(std::span<const Point> positions);

/// Partition without the occupancy check. Empty cells have center kNoNode.
std::vector<Cell> partition_cells(const NetworkInstance& instance, const DerivedParams& params);

/// Throws InfeasibleError naming the first empty cell.
std::vector<Cell> assign_cells(const NetworkInstance& instance, const DerivedParams& params);

SpanningTree build_tree(std::span<const Cell> cells, const DerivedParams& params);
SpanningTree build_tree(std::size_t m, CellId sink_cell, NodeId sink_node = kNoNode);

struct GeometryReport {
  bool feasible = true;
  std::vector<CellId> empty_cells;
  std::size_t min_occupancy = 0;
  std::size_t max_occupancy = 0;
  double occupancy_lower = 0.0;  // 0.091 ln n
  double occupancy_upper = 0.0;  // 5.41 ln n
  bool occupancy_within_bounds = true;
  double max_edge_distance = 0.0;
  bool edges_within_radius = true;
  std::size_t max_degree = 0;
  std::size_t max_depth = 0;
  bool tree_ok = true;  // spanning, acyclic, grid-adjacent edges

  bool ok() const {
    return feasible && occupancy_within_bounds && edges_within_radius && tree_ok && max_degree <= 4;
  }
  std::string summary() const;
};

GeometryReport validate_geometry(std::span<const Cell> cells,
                                 const SpanningTree& tree,
                                 const NetworkInstance& instance,
                                 const DerivedParams& params);

}  // namespace noisynet
