#include "noisynet/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noisynet/errors.hpp"

namespace noisynet {

void Stage1Config::validate(double eps0) const {
  if (c_rep == 0 || c_rep % 2 == 0) throw ConfigError("stage 1: c_rep must be odd");
  if (r2 == 0 || r2 % 2 == 0) throw ConfigError("stage 1: r2 must be odd");
  if (!(eps1 > 0.0 && eps1 < 1.0)) throw ConfigError("stage 1: eps1 must lie in (0, 1)");
  if (!id_code) throw ConfigError("stage 1: no identity code");
  const double miss = majority_error_bound(c_rep, eps0);
  if (miss > eps1) {
    throw ConfigError("stage 1: c_rep=" + std::to_string(c_rep) + " gives majority-flip probability " +
                      std::to_string(miss) + " > eps1=" + std::to_string(eps1));
  }
}

std::size_t log_repeats(std::size_t n, double factor) {
  return smallest_odd_at_least(factor * std::log(static_cast<double>(n)));
}

namespace {

// One slot's worth of simultaneous intra-cell broadcasts across a group.
struct Batch {
  std::vector<TxEvent> events;
  std::vector<NodeId> listeners;
  std::vector<std::size_t> center_at;  // index of each cell's center in listeners, or npos
  std::vector<std::size_t> first;      // offset of each cell's listeners

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  void reset(std::size_t cells) {
    events.clear();
    listeners.clear();
    center_at.assign(cells, npos);
    first.assign(cells + 1, 0);
  }

  // Everyone in the cell except the transmitters listens.
  void add_cell(std::size_t idx, const Cell& cell, std::span<const TxEvent> txs) {
    first[idx] = listeners.size();
    for (NodeId v : cell.members) {
      const bool sending = std::any_of(txs.begin(), txs.end(), [v](const TxEvent& e) { return e.tx == v; });
      if (sending) continue;
      if (v == cell.center) center_at[idx] = listeners.size();
      listeners.push_back(v);
    }
    events.insert(events.end(), txs.begin(), txs.end());
  }

  // Cell has no turn left in this slot; nobody there listens.
  void skip(std::size_t idx) { first[idx] = listeners.size(); }

  void close(std::size_t cells) { first[cells] = listeners.size(); }
};

std::size_t local_index(const Cell& cell, NodeId v) {
  return static_cast<std::size_t>(std::lower_bound(cell.members.begin(), cell.members.end(), v) - cell.members.begin());
}

}  // namespace

std::uint64_t discovery_slots(const CellGroup& group, const Stage1Config& cfg) {
  std::size_t max_n = 0;
  for (const Cell* c : group) max_n = std::max(max_n, c->size());
  return static_cast<std::uint64_t>(cfg.c_rep * max_n);
}

std::uint64_t hist_collect_slots(const CellGroup& group, const Stage1Config& cfg) {
  std::size_t max_n = 0;
  for (const Cell* c : group) max_n = std::max(max_n, c->size());
  return static_cast<std::uint64_t>(cfg.r2 * max_n);
}

namespace {

// Members take turns in id order, `repeats` consecutive slots each. The
// center keeps its own bit; every other member is majority-decoded from the
// center's observations.
std::vector<std::vector<std::uint8_t>> collect_member_bits(const CellGroup& group, std::span<const std::uint8_t> bits,
                                                           std::size_t repeats, Phase phase, SlotEngine& engine,
                                                           std::uint64_t slot0) {
  const std::size_t g = group.size();
  std::vector<std::vector<Obs>> obs(g);
  for (std::size_t c = 0; c < g; ++c) obs[c].assign(group[c]->size() * repeats, Obs::Erased);

  std::size_t max_n = 0;
  for (const Cell* c : group) max_n = std::max(max_n, c->size());
  Batch batch;
  for (std::size_t s = 0; s < max_n * repeats; ++s) {
    const std::size_t k = s / repeats;
    batch.reset(g);
    for (std::size_t c = 0; c < g; ++c) {
      const Cell& cell = *group[c];
      if (k < cell.size()) {
        const NodeId v = cell.members[k];
        const TxEvent e{0, v, bits[v]};
        batch.add_cell(c, cell, std::span<const TxEvent>(&e, 1));
      } else {
        batch.skip(c);
      }
    }
    batch.close(g);
    if (batch.events.empty()) continue;
    const auto out = engine.transmit(slot0 + s, phase, batch.events, batch.listeners);
    for (std::size_t c = 0; c < g; ++c) {
      if (k >= group[c]->size() || batch.center_at[c] == Batch::npos) continue;
      obs[c][s] = to_obs(out[batch.center_at[c]]);
    }
  }

  std::vector<std::vector<std::uint8_t>> decoded(g);
  for (std::size_t c = 0; c < g; ++c) {
    const Cell& cell = *group[c];
    decoded[c].resize(cell.size());
    for (std::size_t k = 0; k < cell.size(); ++k) {
      const NodeId v = cell.members[k];
      if (v == cell.center) {
        decoded[c][k] = bits[v];
      } else {
        decoded[c][k] = majority_or(std::span<const Obs>(obs[c]).subspan(k * repeats, repeats), 0);
      }
    }
  }
  return decoded;
}

}  // namespace

std::vector<NodeId> witness_discovery(const CellGroup& group, std::span<const std::uint8_t> bits,
                                      const Stage1Config& cfg, SlotEngine& engine, std::uint64_t slot0) {
  const auto decoded = collect_member_bits(group, bits, cfg.c_rep, Phase::Discovery, engine, slot0);
  std::vector<NodeId> witness(group.size());
  for (std::size_t c = 0; c < group.size(); ++c) {
    const Cell& cell = *group[c];
    witness[c] = cell.members.front();
    for (std::size_t k = 0; k < cell.size(); ++k) {
      if (decoded[c][k]) {
        witness[c] = cell.members[k];
        break;
      }
    }
  }
  return witness;
}

std::vector<std::vector<std::uint64_t>> distribute_identity(const CellGroup& group, std::span<const NodeId> witness,
                                                            const Stage1Config& cfg, SlotEngine& engine,
                                                            std::uint64_t slot0) {
  const BlockCode& code = *cfg.id_code;
  const std::size_t g = group.size();
  std::vector<std::vector<std::uint8_t>> words(g);
  std::vector<std::vector<std::vector<Obs>>> heard(g);  // [cell][member][bit]
  for (std::size_t c = 0; c < g; ++c) {
    words[c] = code.encode_value(local_index(*group[c], witness[c]));
    heard[c].assign(group[c]->size(), std::vector<Obs>(code.block_len(), Obs::Erased));
  }
  Batch batch;
  for (std::size_t s = 0; s < code.block_len(); ++s) {
    batch.reset(g);
    for (std::size_t c = 0; c < g; ++c) {
      const TxEvent e{0, group[c]->center, words[c][s]};
      batch.add_cell(c, *group[c], std::span<const TxEvent>(&e, 1));
    }
    batch.close(g);
    const auto out = engine.transmit(slot0 + s, Phase::Identity, batch.events, batch.listeners);
    for (std::size_t c = 0; c < g; ++c) {
      for (std::size_t li = batch.first[c]; li < batch.first[c + 1]; ++li) {
        heard[c][local_index(*group[c], batch.listeners[li])][s] = to_obs(out[li]);
      }
    }
  }
  std::vector<std::vector<std::uint64_t>> believed(g);
  for (std::size_t c = 0; c < g; ++c) {
    const Cell& cell = *group[c];
    believed[c].resize(cell.size());
    for (std::size_t k = 0; k < cell.size(); ++k) {
      believed[c][k] = cell.members[k] == cell.center ? local_index(cell, witness[c]) : code.decode_value(heard[c][k]);
    }
  }
  return believed;
}

std::vector<std::uint8_t> confirm_value(const CellGroup& group, std::span<const NodeId> witness,
                                        const std::vector<std::vector<std::uint64_t>>& believed,
                                        std::span<const std::uint8_t> bits, const Stage1Config& cfg,
                                        SlotEngine& engine, std::uint64_t slot0, std::vector<std::size_t>* believers) {
  const std::size_t g = group.size();
  std::vector<std::vector<TxEvent>> senders(g);
  for (std::size_t c = 0; c < g; ++c) {
    const Cell& cell = *group[c];
    for (std::size_t k = 0; k < cell.size(); ++k) {
      if (believed[c][k] == k) senders[c].push_back(TxEvent{0, cell.members[k], bits[cell.members[k]]});
    }
    if (believers) believers->push_back(senders[c].size());
  }
  std::vector<std::vector<Obs>> at_center(g, std::vector<Obs>(cfg.r2, Obs::Erased));
  Batch batch;
  for (std::size_t s = 0; s < cfg.r2; ++s) {
    batch.reset(g);
    for (std::size_t c = 0; c < g; ++c) batch.add_cell(c, *group[c], senders[c]);
    batch.close(g);
    if (batch.events.empty()) continue;
    const auto out = engine.transmit(slot0 + s, Phase::Confirmation, batch.events, batch.listeners);
    for (std::size_t c = 0; c < g; ++c) {
      if (batch.center_at[c] != Batch::npos) at_center[c][s] = to_obs(out[batch.center_at[c]]);
    }
  }
  std::vector<std::uint8_t> value(g);
  for (std::size_t c = 0; c < g; ++c) {
    const Cell& cell = *group[c];
    value[c] = witness[c] == cell.center ? bits[cell.center] : majority_or(at_center[c], 0);
  }
  return value;
}

namespace {

std::vector<CellGroup> groups_of(std::span<const Cell> cells, std::span<const ScheduleClass> classes) {
  std::vector<CellGroup> groups;
  for (const auto& cls : classes) {
    if (cls.cells.empty()) continue;
    CellGroup g;
    for (CellId id : cls.cells) {
      if (cells[id].empty()) throw InfeasibleError("stage 1: cell " + std::to_string(id) + " is empty");
      g.push_back(&cells[id]);
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

}  // namespace

Stage1Result run_stage1_max(std::span<const Cell> cells, std::span<const ScheduleClass> classes,
                            std::span<const std::uint8_t> bits, const Stage1Config& cfg, SlotEngine& engine) {
  Stage1Result res;
  res.witness.assign(cells.size(), kNoNode);
  res.value.assign(cells.size(), 0);
  res.believers.assign(cells.size(), 0);
  std::uint64_t cursor = 0;
  for (const auto& group : groups_of(cells, classes)) {
    const std::uint64_t disc = discovery_slots(group, cfg);
    const auto w = witness_discovery(group, bits, cfg, engine, cursor);
    cursor += disc;
    const auto believed = distribute_identity(group, w, cfg, engine, cursor);
    cursor += cfg.l1();
    std::vector<std::size_t> believers;
    const auto f = confirm_value(group, w, believed, bits, cfg, engine, cursor, &believers);
    cursor += cfg.r2;
    for (std::size_t c = 0; c < group.size(); ++c) {
      res.witness[group[c]->id] = w[c];
      res.value[group[c]->id] = f[c];
      res.believers[group[c]->id] = believers[c];
    }
  }
  res.slots = cursor;
  engine.add_slots(StageTag::Stage1, cursor);
  return res;
}

Stage1Result run_stage1_hist(std::span<const Cell> cells, std::span<const ScheduleClass> classes,
                             std::span<const std::uint8_t> bits, const Stage1Config& cfg, SlotEngine& engine) {
  Stage1Result res;
  res.count.assign(cells.size(), 0);
  std::uint64_t cursor = 0;
  for (const auto& group : groups_of(cells, classes)) {
    const auto decoded = collect_member_bits(group, bits, cfg.r2, Phase::HistCollect, engine, cursor);
    cursor += hist_collect_slots(group, cfg);
    for (std::size_t c = 0; c < group.size(); ++c) {
      res.count[group[c]->id] = static_cast<std::size_t>(std::count(decoded[c].begin(), decoded[c].end(), 1));
    }
  }
  res.slots = cursor;
  engine.add_slots(StageTag::Stage1, cursor);
  return res;
}

}  // namespace noisynet
