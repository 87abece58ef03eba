#include "noisynet/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace noisynet {

double NoiseModel::flip_probability(const FlipQuery& q) const {
  if (mode == NoiseMode::Iid || !adversary) return eps0;
  return std::clamp(adversary(q), 0.0, eps0);
}

void NoiseModel::validate() const {
  if (!(eps0 >= 0.0 && eps0 < 0.5)) throw std::invalid_argument("noise: eps0 must lie in [0, 0.5)");
  if (mode == NoiseMode::Adversarial && !adversary) throw std::invalid_argument("noise: adversarial mode needs a hook");
}

NoiseModel NoiseModel::iid(double eps0) {
  NoiseModel m;
  m.eps0 = eps0;
  m.validate();
  return m;
}

NoiseModel NoiseModel::constant_adversary(double eps0) {
  NoiseModel m;
  m.eps0 = eps0;
  m.mode = NoiseMode::Adversarial;
  m.adversary = [eps0](const FlipQuery&) { return eps0; };
  m.validate();
  return m;
}

std::uint8_t flip(std::uint8_t bit, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 0.5)) throw std::invalid_argument("flip: p must lie in [0, 0.5)");
  if (p == 0.0) return bit;
  return rng.uniform() < p ? static_cast<std::uint8_t>(1 - bit) : bit;
}

std::vector<RxOutcome> classify_slot(std::span<const TxEvent> events,
                                     std::span<const NodeId> listeners,
                                     std::span<const Point> positions,
                                     const DerivedParams& params) {
  const double r2 = params.radius * params.radius;
  const double g2 = params.guard_radius() * params.guard_radius();
  std::vector<RxOutcome> out(listeners.size());
  for (std::size_t li = 0; li < listeners.size(); ++li) {
    const NodeId j = listeners[li];
    const Point& pj = positions[j];
    std::size_t in_range = 0;
    std::size_t near = 0;  // transmitters closer than the guard radius
    std::size_t source = 0;
    bool source_near = false;
    bool self = false;
    for (std::size_t e = 0; e < events.size(); ++e) {
      if (events[e].tx == j) {
        self = true;
        break;
      }
      const Point& pi = positions[events[e].tx];
      const double dx = pi.x - pj.x;
      const double dy = pi.y - pj.y;
      const double d2 = dx * dx + dy * dy;
      const bool is_near = d2 < g2;
      if (d2 <= r2) {
        ++in_range;
        source = e;
        source_near = is_near;
      }
      if (is_near) ++near;
    }
    RxOutcome& o = out[li];
    if (self || in_range == 0) continue;
    o.source = events[source].tx;
    if (in_range == 1 && near == (source_near ? 1u : 0u)) {
      o.kind = RxKind::Received;
      o.bit = events[source].bit;
    } else {
      o.kind = RxKind::Collision;
    }
  }
  return out;
}

std::vector<RxOutcome> resolve_slot(std::span<const TxEvent> events,
                                    std::span<const NodeId> listeners,
                                    std::span<const Point> positions,
                                    const DerivedParams& params,
                                    const NoiseModel& noise,
                                    Rng& rng,
                                    std::span<const TxEvent> history) {
  auto out = classify_slot(events, listeners, positions, params);
  const std::uint64_t slot = events.empty() ? 0 : events.front().slot;
  for (std::size_t li = 0; li < listeners.size(); ++li) {
    auto& o = out[li];
    if (o.kind != RxKind::Received) continue;
    const double p = noise.flip_probability(FlipQuery{slot, o.source, listeners[li], history});
    o.bit = flip(o.bit, p, rng);
  }
  return out;
}

std::vector<ScheduleClass> color_cells(std::span<const Cell> cells, const DerivedParams& params) {
  const std::size_t d = params.reuse;
  std::vector<ScheduleClass> classes(d * d);
  for (std::size_t c = 0; c < classes.size(); ++c) classes[c].color = c;
  for (const auto& cell : cells) classes[cell_color(cell.row, cell.col, d)].cells.push_back(cell.id);
  return classes;
}

LinkDirection link_direction(CellId from, CellId to, std::size_t m) {
  const std::size_t fr = from / m, fc = from % m, tr = to / m, tc = to % m;
  if (fr == tr && tc == fc + 1) return LinkDirection::East;
  if (fr == tr && tc + 1 == fc) return LinkDirection::West;
  if (fc == tc && tr == fr + 1) return LinkDirection::South;
  if (fc == tc && tr + 1 == fr) return LinkDirection::North;
  throw std::invalid_argument("link_direction: cells are not grid-adjacent");
}

std::size_t link_color(CellId from, CellId to, std::size_t m, std::size_t reuse) {
  const auto dir = static_cast<std::size_t>(link_direction(from, to, m));
  return dir * reuse * reuse + cell_color(from / m, from % m, reuse);
}

StageTag stage_of(Phase phase) {
  switch (phase) {
    case Phase::Discovery:
    case Phase::Identity:
    case Phase::Confirmation:
    case Phase::HistCollect:
      return StageTag::Stage1;
    case Phase::InterCell:
      return StageTag::Stage2;
    case Phase::DistributeDown:
    case Phase::DistributeBroadcast:
      return StageTag::Distribution;
  }
  return StageTag::Stage1;
}

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::Discovery: return "discovery";
    case Phase::Identity: return "identity";
    case Phase::Confirmation: return "confirmation";
    case Phase::HistCollect: return "hist-collect";
    case Phase::InterCell: return "inter-cell";
    case Phase::DistributeDown: return "distribute-down";
    case Phase::DistributeBroadcast: return "distribute-broadcast";
  }
  return "?";
}

std::uint64_t Metrics::slots_total() const {
  std::uint64_t s = 0;
  for (const auto& c : stages) s += c.slots;
  return s;
}

std::uint64_t Metrics::tx_count() const {
  std::uint64_t s = 0;
  for (const auto& c : stages) s += c.tx;
  return s;
}

std::uint64_t Metrics::rx_count() const {
  std::uint64_t s = 0;
  for (const auto& c : stages) s += c.rx;
  return s;
}

double Metrics::em1() const {
  double s = 0;
  for (const auto& c : stages) s += c.em1;
  return s;
}

double Metrics::em2() const {
  double s = 0;
  for (const auto& c : stages) s += c.em2;
  return s;
}

namespace {
bool close(double a, double b, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace

bool Metrics::energy_identities_hold(double rel_tol) const {
  for (const auto& c : stages) {
    const double tx = static_cast<double>(c.tx);
    const double rx = static_cast<double>(c.rx);
    if (!close(c.em2, energy.e_t * tx, rel_tol)) return false;
    if (!close(c.em1, energy.e_t * tx + energy.e_r * rx, rel_tol)) return false;
  }
  return true;
}

void account(Metrics& metrics, StageTag stage, std::uint64_t tx, std::uint64_t rx) {
  auto& c = metrics.at(stage);
  c.tx += tx;
  c.rx += rx;
  const double et = metrics.energy.e_t * static_cast<double>(tx);
  c.em2 += et;
  c.em1 += et + metrics.energy.e_r * static_cast<double>(rx);
}

void account(Metrics& metrics, StageTag stage, std::span<const TxEvent> events,
             std::span<const RxOutcome> outcomes) {
  const auto rx = static_cast<std::uint64_t>(
      std::count_if(outcomes.begin(), outcomes.end(), [](const RxOutcome& o) { return o.kind != RxKind::Silence; }));
  account(metrics, stage, events.size(), rx);
}

SlotEngine::SlotEngine(std::span<const Point> positions, const DerivedParams& params, NoiseModel noise, Rng& rng,
                       EnergyConfig energy)
    : positions_(positions), params_(params), noise_(std::move(noise)), rng_(rng) {
  noise_.validate();
  metrics_.energy = energy;
}

std::vector<RxOutcome> SlotEngine::transmit(std::uint64_t slot, Phase phase, std::span<const TxEvent> events,
                                            std::span<const NodeId> listeners) {
  std::vector<TxEvent> stamped(events.begin(), events.end());
  for (auto& e : stamped) e.slot = slot;
  const bool keep_history = noise_.mode == NoiseMode::Adversarial;
  auto outcomes = resolve_slot(stamped, listeners, positions_, params_, noise_, rng_,
                               keep_history ? std::span<const TxEvent>(history_) : std::span<const TxEvent>{});
  account(metrics_, stage_of(phase), stamped, outcomes);
  if (keep_history) history_.insert(history_.end(), stamped.begin(), stamped.end());
  if (tracing_) {
    TraceRecord rec;
    rec.slot = slot;
    rec.phase = phase;
    rec.events = std::move(stamped);
    rec.listeners.assign(listeners.begin(), listeners.end());
    rec.outcomes = outcomes;
    rec.cum_tx = metrics_.tx_count();
    rec.cum_rx = metrics_.rx_count();
    rec.cum_em1 = metrics_.em1();
    rec.cum_em2 = metrics_.em2();
    trace_.records.push_back(std::move(rec));
  }
  return outcomes;
}

void SlotEngine::charge(Phase phase, std::uint64_t tx, std::uint64_t rx) {
  account(metrics_, stage_of(phase), tx, rx);
  if (tracing_) trace_.charged_tx.push_back(tx);
}

}  // namespace noisynet
