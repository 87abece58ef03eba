#include "noisynet/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace noisynet {

std::size_t SubstagePlan::array_count() const {
  std::size_t n = 0;
  for (const auto& s : stages) n += s.arrays.size();
  return n;
}

std::size_t SubstagePlan::link_count() const {
  std::size_t n = 0;
  for (const auto& s : stages) {
    for (const auto& a : s.arrays) n += a.links();
  }
  return n;
}

std::size_t substage_levels(std::size_t n, double factor) {
  const auto l = static_cast<std::size_t>(std::ceil(factor * std::log(static_cast<double>(n))));
  return std::max<std::size_t>(l, 1);
}

namespace {

// A straight path toward the receiving end; cell(d) is the cell at distance
// d from it, 0 <= d <= hops.
struct Segment {
  std::size_t hops = 0;
  std::function<CellId(std::size_t)> cell;
};

std::size_t bands(std::size_t hops, std::size_t l) { return (hops + l - 1) / l; }

void emit_stages(std::vector<Segment> segments, std::size_t l, PlanPhase phase, SubstagePlan& plan) {
  std::size_t total = 0;
  for (const auto& s : segments) total = std::max(total, bands(s.hops, l));
  for (std::size_t st = 0; st < total; ++st) {
    const std::size_t band = total - 1 - st;
    Substage stage;
    stage.phase = phase;
    for (const auto& seg : segments) {
      if (seg.hops <= band * l) continue;
      const std::size_t lo = band * l;
      const std::size_t hi = std::min(seg.hops, lo + l);
      CellArray arr;
      for (std::size_t d = hi + 1; d-- > lo;) arr.cells.push_back(seg.cell(d));
      stage.arrays.push_back(std::move(arr));
    }
    plan.stages.push_back(std::move(stage));
  }
}

}  // namespace

SubstagePlan build_substages(const SpanningTree& tree, std::size_t l_sub) {
  if (l_sub == 0) throw std::invalid_argument("build_substages: l_sub must be positive");
  SubstagePlan plan;
  plan.l_sub = l_sub;
  const std::size_t m = tree.m;
  if (m <= 1) return plan;
  const std::size_t sr = tree.sink_cell / m;
  const std::size_t sc = tree.sink_cell % m;

  std::vector<Segment> rows;
  for (std::size_t r = 0; r < m; ++r) {
    if (sc > 0) rows.push_back({sc, [=](std::size_t d) { return cell_index(r, sc - d, m); }});
    if (sc + 1 < m) rows.push_back({m - 1 - sc, [=](std::size_t d) { return cell_index(r, sc + d, m); }});
  }
  emit_stages(std::move(rows), l_sub, PlanPhase::RowsToAxis, plan);

  std::vector<Segment> column;
  if (sr > 0) column.push_back({sr, [=](std::size_t d) { return cell_index(sr - d, sc, m); }});
  if (sr + 1 < m) column.push_back({m - 1 - sr, [=](std::size_t d) { return cell_index(sr + d, sc, m); }});
  emit_stages(std::move(column), l_sub, PlanPhase::AxisToSink, plan);
  return plan;
}

SubstagePlan reverse_plan(const SubstagePlan& plan) {
  SubstagePlan out;
  out.l_sub = plan.l_sub;
  for (auto it = plan.stages.rbegin(); it != plan.stages.rend(); ++it) {
    Substage s;
    s.phase = PlanPhase::DistributeDown;
    for (const auto& a : it->arrays) {
      CellArray r;
      r.cells.assign(a.cells.rbegin(), a.cells.rend());
      s.arrays.push_back(std::move(r));
    }
    out.stages.push_back(std::move(s));
  }
  return out;
}

std::size_t plan_max_rounds(const SubstagePlan& plan, bool histogram, std::size_t g) {
  std::size_t best = 0;
  for (const auto& s : plan.stages) {
    for (const auto& a : s.arrays) {
      best = std::max(best, histogram ? hist_schedule_rounds(a.links(), g) : max_schedule_rounds(a.links()));
    }
  }
  return best;
}

CenterTransport::CenterTransport(const CellArray& array, std::span<const Cell> cells, SlotEngine& engine, Phase phase,
                                 std::uint64_t stage_slot0)
    : array_(array), cells_(cells), engine_(engine), phase_(phase), slot0_(stage_slot0) {}

Obs CenterTransport::send(std::size_t link, bool reverse, std::uint64_t logical_slot, std::uint8_t bit) {
  CellId from = array_.cells[link];
  CellId to = array_.cells[link + 1];
  if (reverse) std::swap(from, to);
  const auto& params = engine_.params();
  const std::size_t color = link_color(from, to, params.m, params.reuse);
  const std::uint64_t slot = slot0_ + logical_slot * params.k5 + color;
  const TxEvent e{slot, cells_[from].center, bit};
  const NodeId rx = cells_[to].center;
  const auto out = engine_.transmit(slot, phase_, std::span<const TxEvent>(&e, 1), std::span<const NodeId>(&rx, 1));
  return to_obs(out.front());
}

namespace {

LineResult run_array(const LineProtocol& protocol, const CellArray& array, std::span<const Cell> cells,
                     const SimConfig& sim, SlotEngine& engine, Phase phase, std::uint64_t slot0) {
  CenterTransport transport(array, cells, engine, phase, slot0);
  auto res = simulate_line(protocol, sim, transport, engine.rng());
  if (sim.mode == SimMode::Abstract) engine.charge(phase, res.transmissions, res.transmissions);
  return res;
}

}  // namespace

LineResult run_substage_max(const CellArray& array, std::vector<std::uint64_t>& values, std::span<const Cell> cells,
                            const Stage2Config& cfg, SlotEngine& engine, Phase phase, std::uint64_t slot0) {
  std::vector<std::uint8_t> in;
  for (CellId c : array.cells) in.push_back(static_cast<std::uint8_t>(values[c] & 1U));
  SimConfig sim = cfg.sim;
  sim.corrupt = [](Rng& rng) { return rng.next() >> 63; };
  auto res = run_array(or_line_protocol(in), array, cells, sim, engine, phase, slot0);
  values[array.cells.back()] = res.outputs.back() & 1U;
  return res;
}

LineResult run_substage_hist(const CellArray& array, std::vector<std::uint64_t>& values, std::span<const Cell> cells,
                             const Stage2Config& cfg, SlotEngine& engine, Phase phase, std::uint64_t slot0) {
  std::vector<std::uint64_t> in;
  for (CellId c : array.cells) in.push_back(values[c]);
  SimConfig sim = cfg.sim;
  const std::size_t g = cfg.g;
  sim.corrupt = [g](Rng& rng) { return rng.below(std::uint64_t{1} << g) << g; };
  auto res = run_array(sum_line_protocol(in, g), array, cells, sim, engine, phase, slot0);
  values[array.cells.back()] = sum_state_value(res.outputs.back(), g);
  return res;
}

namespace {

std::size_t stage_rounds(const Substage& stage, bool histogram, std::size_t g) {
  std::size_t best = 0;
  for (const auto& a : stage.arrays) {
    best = std::max(best, histogram ? hist_schedule_rounds(a.links(), g) : max_schedule_rounds(a.links()));
  }
  return best;
}

template <typename RunArray>
Stage2Result run_plan(const SubstagePlan& plan, const SpanningTree& tree, std::vector<std::uint64_t> values,
                      const Stage2Config& cfg, bool histogram, SlotEngine& engine, RunArray&& run_one) {
  Stage2Result out;
  const std::uint64_t k5 = engine.params().k5;
  std::uint64_t cursor = 0;
  Stage2Config local = cfg;
  for (const auto& stage : plan.stages) {
    std::uint64_t longest = 0;
    local.sim.stage_rounds = stage_rounds(stage, histogram, cfg.g);
    for (const auto& array : stage.arrays) {
      const auto res = run_one(array, values, cursor, local);
      longest = std::max(longest, res.logical_slots);
      out.link_bits += res.link_bits;
      out.corruptions += res.corrupted ? 1 : 0;
      ++out.arrays;
    }
    cursor += longest * k5;
  }
  out.slots = cursor;
  out.sink_value = values.empty() ? 0 : values[tree.sink_cell];
  out.cell_value = std::move(values);
  return out;
}

}  // namespace

Stage2Result run_stage2_max(const SubstagePlan& plan, const SpanningTree& tree, std::span<const Cell> cells,
                            std::span<const std::uint8_t> cell_values, const Stage2Config& cfg, SlotEngine& engine) {
  std::vector<std::uint64_t> values(cell_values.begin(), cell_values.end());
  auto out = run_plan(plan, tree, std::move(values), cfg, false, engine,
                      [&](const CellArray& a, std::vector<std::uint64_t>& v, std::uint64_t slot0,
                          const Stage2Config& c) {
                        return run_substage_max(a, v, cells, c, engine, Phase::InterCell, slot0);
                      });
  out.max_rounds = plan_max_rounds(plan, false, cfg.g);
  engine.add_slots(StageTag::Stage2, out.slots);
  return out;
}

Stage2Result run_stage2_hist(const SubstagePlan& plan, const SpanningTree& tree, std::span<const Cell> cells,
                             std::span<const std::size_t> cell_counts, const Stage2Config& cfg, SlotEngine& engine) {
  std::vector<std::uint64_t> values(cell_counts.begin(), cell_counts.end());
  auto out = run_plan(plan, tree, std::move(values), cfg, true, engine,
                      [&](const CellArray& a, std::vector<std::uint64_t>& v, std::uint64_t slot0,
                          const Stage2Config& c) {
                        return run_substage_hist(a, v, cells, c, engine, Phase::InterCell, slot0);
                      });
  out.max_rounds = plan_max_rounds(plan, true, cfg.g);
  engine.add_slots(StageTag::Stage2, out.slots);
  return out;
}

DistributionResult distribute_result(const SubstagePlan& plan, const SpanningTree& tree, std::span<const Cell> cells,
                                     std::span<const ScheduleClass> classes, std::uint64_t value, std::size_t bits,
                                     std::size_t r2, const Stage2Config& cfg, SlotEngine& engine) {
  DistributionResult out;
  const SubstagePlan down = reverse_plan(plan);
  std::vector<std::uint64_t> values(cells.size(), 0);
  if (!values.empty()) values[tree.sink_cell] = value;

  // Forwarding down an array: the first cell holds the value, the others
  // start at zero, so OR (one bit) or addition (g bits) delivers it intact
  // to every cell of the array.
  const std::uint64_t k5 = engine.params().k5;
  std::uint64_t cursor = 0;
  for (const auto& stage : down.stages) {
    std::uint64_t longest = 0;
    const std::size_t rounds = stage_rounds(stage, bits != 1, bits);
    for (const auto& array : stage.arrays) {
      LineProtocol protocol;
      SimConfig sim = cfg.sim;
      sim.stage_rounds = rounds;
      if (bits == 1) {
        std::vector<std::uint8_t> in(array.cells.size(), 0);
        in[0] = static_cast<std::uint8_t>(values[array.cells[0]] & 1U);
        protocol = or_line_protocol(in);
        sim.corrupt = [](Rng& rng) { return rng.next() >> 63; };
      } else {
        std::vector<std::uint64_t> in(array.cells.size(), 0);
        in[0] = values[array.cells[0]];
        protocol = sum_line_protocol(in, bits);
        sim.corrupt = [bits](Rng& rng) { return rng.below(std::uint64_t{1} << bits) << bits; };
      }
      CenterTransport transport(array, cells, engine, Phase::DistributeDown, cursor);
      const auto res = simulate_line(protocol, sim, transport, engine.rng());
      if (sim.mode == SimMode::Abstract) engine.charge(Phase::DistributeDown, res.transmissions, res.transmissions);
      for (std::size_t k = 1; k < array.cells.size(); ++k) {
        values[array.cells[k]] = bits == 1 ? (res.outputs[k] & 1U) : sum_state_value(res.outputs[k], bits);
      }
      longest = std::max(longest, res.logical_slots);
    }
    cursor += longest * k5;
  }

  // Intra-cell broadcast, one color class at a time.
  out.node_value.assign(engine.positions().size(), 0);
  for (const auto& cls : classes) {
    if (cls.cells.empty()) continue;
    std::vector<std::vector<std::vector<Obs>>> heard(cls.cells.size());  // [cell][member][bit * r2 + rep]
    for (std::size_t c = 0; c < cls.cells.size(); ++c) {
      heard[c].assign(cells[cls.cells[c]].size(), std::vector<Obs>(bits * r2, Obs::Erased));
    }
    for (std::size_t s = 0; s < bits * r2; ++s) {
      std::vector<TxEvent> events;
      std::vector<NodeId> listeners;
      std::vector<std::size_t> first;
      for (CellId id : cls.cells) {
        const Cell& cell = cells[id];
        const auto bit = static_cast<std::uint8_t>((values[id] >> (s / r2)) & 1U);
        events.push_back(TxEvent{0, cell.center, bit});
        first.push_back(listeners.size());
        for (NodeId v : cell.members) {
          if (v != cell.center) listeners.push_back(v);
        }
      }
      first.push_back(listeners.size());
      const auto rx = engine.transmit(cursor + s, Phase::DistributeBroadcast, events, listeners);
      for (std::size_t c = 0; c < cls.cells.size(); ++c) {
        const Cell& cell = cells[cls.cells[c]];
        for (std::size_t li = first[c]; li < first[c + 1]; ++li) {
          const auto k = static_cast<std::size_t>(
              std::lower_bound(cell.members.begin(), cell.members.end(), listeners[li]) - cell.members.begin());
          heard[c][k][s] = to_obs(rx[li]);
        }
      }
    }
    for (std::size_t c = 0; c < cls.cells.size(); ++c) {
      const Cell& cell = cells[cls.cells[c]];
      for (std::size_t k = 0; k < cell.size(); ++k) {
        const NodeId v = cell.members[k];
        if (v == cell.center) {
          out.node_value[v] = values[cell.id];
          continue;
        }
        std::uint64_t decoded = 0;
        for (std::size_t b = 0; b < bits; ++b) {
          const auto span = std::span<const Obs>(heard[c][k]).subspan(b * r2, r2);
          decoded |= std::uint64_t{majority_or(span, 0)} << b;
        }
        out.node_value[v] = decoded;
      }
    }
    cursor += bits * r2;
  }
  out.slots = cursor;
  engine.add_slots(StageTag::Distribution, cursor);
  return out;
}

}  // namespace noisynet
