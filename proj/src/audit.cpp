#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "noisynet/harness.hpp"

namespace noisynet {

namespace {

using SlotKey = std::pair<StageTag, std::uint64_t>;

std::map<SlotKey, std::vector<const TraceRecord*>> group_slots(const Trace& trace) {
  std::map<SlotKey, std::vector<const TraceRecord*>> groups;
  for (const auto& rec : trace.records) groups[{stage_of(rec.phase), rec.slot}].push_back(&rec);
  return groups;
}

std::string where(const SlotKey& key, Phase phase) {
  std::ostringstream s;
  s << "stage " << static_cast<int>(key.first) + 1 << " slot " << key.second << " (" << phase_name(phase) << ")";
  return s.str();
}

constexpr std::size_t kMaxFailures = 50;

void fail(AuditReport& report, bool& flag, const std::string& msg) {
  flag = false;
  if (report.failures.size() < kMaxFailures) report.failures.push_back(msg);
}

}  // namespace

void check_collisions(const Trace& trace, std::span<const Point> positions, const DerivedParams& params,
                      AuditReport& report) {
  for (const auto& [key, recs] : group_slots(trace)) {
    std::vector<TxEvent> all;
    for (const auto* r : recs) all.insert(all.end(), r->events.begin(), r->events.end());
    std::set<NodeId> seen;
    for (const auto& e : all) {
      if (!seen.insert(e.tx).second) {
        fail(report, report.collisions_ok, where(key, recs.front()->phase) + ": node " + std::to_string(e.tx) +
                                               " scheduled twice");
      }
    }
    ++report.slots_checked;
    for (const auto* r : recs) {
      if (r->phase == Phase::Confirmation) {
        ++report.confirmation_exempt;
        continue;
      }
      const auto outcomes = classify_slot(all, r->listeners, positions, params);
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        const bool own = std::any_of(r->events.begin(), r->events.end(),
                                     [&](const TxEvent& e) { return e.tx == o.source; });
        if (o.kind == RxKind::Received && own) continue;
        std::string what = o.kind == RxKind::Collision ? "collision" : o.kind == RxKind::Silence ? "silence"
                                                                                                  : "foreign sender";
        fail(report, report.collisions_ok,
             where(key, r->phase) + ": receiver " + std::to_string(r->listeners[i]) + " got " + what);
      }
    }
  }
}

void check_oblivious(const Trace& a, const Trace& b, AuditReport& report) {
  auto senders = [](const Trace& t) {
    std::map<SlotKey, std::set<NodeId>> out;
    for (const auto& rec : t.records) {
      if (rec.phase == Phase::Confirmation) continue;
      auto& s = out[{stage_of(rec.phase), rec.slot}];
      for (const auto& e : rec.events) s.insert(e.tx);
    }
    return out;
  };
  auto phase_at = [](const Trace& t, const SlotKey& key) {
    for (const auto& rec : t.records) {
      if (stage_of(rec.phase) == key.first && rec.slot == key.second) return rec.phase;
    }
    return Phase::Discovery;
  };
  const auto sa = senders(a);
  const auto sb = senders(b);
  for (const auto& [key, set] : sa) {
    const auto it = sb.find(key);
    if (it == sb.end() || it->second != set) {
      fail(report, report.oblivious_ok, where(key, phase_at(a, key)) + ": transmitter set depends on the data");
    }
  }
  for (const auto& [key, set] : sb) {
    if (!sa.count(key)) {
      fail(report, report.oblivious_ok, where(key, phase_at(b, key)) + ": slot used only with complemented data");
    }
  }
}

void check_energy(const Trace& trace, const EnergyConfig& energy, AuditReport& report) {
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)}); };
  std::uint64_t prev_tx = 0, prev_rx = 0;
  for (const auto& rec : trace.records) {
    const SlotKey key{stage_of(rec.phase), rec.slot};
    const auto tx = static_cast<double>(rec.cum_tx);
    const auto rx = static_cast<double>(rec.cum_rx);
    if (!close(rec.cum_em2, energy.e_t * tx) || !close(rec.cum_em1, energy.e_t * tx + energy.e_r * rx)) {
      fail(report, report.energy_ok, where(key, rec.phase) + ": energy identity violated");
    }
    const auto heard = static_cast<std::uint64_t>(std::count_if(
        rec.outcomes.begin(), rec.outcomes.end(), [](const RxOutcome& o) { return o.kind != RxKind::Silence; }));
    if (rec.cum_tx < prev_tx + rec.events.size() || rec.cum_rx < prev_rx + heard) {
      fail(report, report.energy_ok, where(key, rec.phase) + ": counters do not cover the slot");
    }
    prev_tx = rec.cum_tx;
    prev_rx = rec.cum_rx;
  }
}

void check_link_coloring(const SubstagePlan& plan, std::span<const Cell> cells, std::span<const Point> positions,
                         const DerivedParams& params, bool bidirectional, AuditReport& report) {
  for (std::size_t s = 0; s < plan.stages.size(); ++s) {
    std::map<std::size_t, std::vector<std::pair<CellId, CellId>>> by_color;
    for (const auto& array : plan.stages[s].arrays) {
      for (std::size_t k = 0; k + 1 < array.cells.size(); ++k) {
        const CellId from = array.cells[k], to = array.cells[k + 1];
        by_color[link_color(from, to, params.m, params.reuse)].push_back({from, to});
        if (bidirectional) by_color[link_color(to, from, params.m, params.reuse)].push_back({to, from});
      }
    }
    for (const auto& [color, links] : by_color) {
      std::vector<TxEvent> events;
      std::vector<NodeId> listeners;
      for (const auto& [from, to] : links) {
        events.push_back({0, cells[from].center, 1});
        listeners.push_back(cells[to].center);
      }
      const auto out = classify_slot(events, listeners, positions, params);
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].kind == RxKind::Received && out[i].source == events[i].tx) continue;
        std::ostringstream msg;
        msg << "plan stage " << s << " color " << color << ": link " << links[i].first << "->" << links[i].second
            << " is not delivered";
        fail(report, report.coloring_ok, msg.str());
      }
    }
  }
}

AuditReport validate_run(const ExperimentConfig& cfg) {
  cfg.validate();
  AuditReport report;
  for (std::size_t n : cfg.n_values) {
    const SizeContext ctx = make_context(cfg, n);
    TrialOptions opts;
    opts.trace = true;
    const auto a = run_trial(cfg, ctx, 0, opts);
    opts.complement_bits = true;
    const auto b = run_trial(cfg, ctx, 0, opts);
    const auto& w = a.world;

    check_collisions(*a.trace, w.instance.positions, ctx.params, report);
    check_collisions(*b.trace, b.world.instance.positions, ctx.params, report);
    check_oblivious(*a.trace, *b.trace, report);
    check_energy(*a.trace, cfg.energy, report);
    check_energy(*b.trace, cfg.energy, report);
    if (!a.record.metrics.energy_identities_hold()) {
      fail(report, report.energy_ok, "n = " + std::to_string(n) + ": final energy identities violated");
    }
    check_link_coloring(w.plan, w.cells, w.instance.positions, ctx.params, cfg.mode == SimMode::TreeCode, report);

    const auto geo = validate_geometry(w.cells, w.tree, w.instance, ctx.params);
    if (!(geo.feasible && geo.tree_ok && geo.edges_within_radius && geo.max_degree <= 4)) {
      fail(report, report.geometry_ok, "n = " + std::to_string(n) + ": " + geo.summary());
    }
  }
  return report;
}

}  // namespace noisynet
