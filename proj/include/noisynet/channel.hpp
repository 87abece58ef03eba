#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "noisynet/geometry.hpp"
#include "noisynet/rng.hpp"

namespace noisynet {

struct TxEvent {
  std::uint64_t slot = 0;
  NodeId tx = kNoNode;
  std::uint8_t bit = 0;
};

enum class RxKind : std::uint8_t { Silence, Received, Collision };

struct RxOutcome {
  RxKind kind = RxKind::Silence;
  std::uint8_t bit = 0;     // valid when Received
  NodeId source = kNoNode;  // the unique in-range transmitter, if any
};

struct FlipQuery {
  std::uint64_t slot = 0;
  NodeId tx = kNoNode;
  NodeId rx = kNoNode;
  std::span<const TxEvent> history;  // every event before this slot
};

enum class NoiseMode { Iid, Adversarial };

/// Binary symmetric noise with flip probability bounded by eps0. In
/// adversarial mode the hook picks each reception's flip probability and is
/// clamped to [0, eps0].
struct NoiseModel {
  double eps0 = 0.0;
  NoiseMode mode = NoiseMode::Iid;
  std::function<double(const FlipQuery&)> adversary;

  double flip_probability(const FlipQuery& q) const;
  void validate() const;

  static NoiseModel iid(double eps0);
  static NoiseModel constant_adversary(double eps0);
};

/// Returns 1 - bit with probability p. Requires p in [0, 0.5).
std::uint8_t flip(std::uint8_t bit, double p, Rng& rng);

/// Noise-free protocol-model classification of every listener. A node that
/// is itself transmitting hears nothing.
std::vector<RxOutcome> classify_slot(std::span<const TxEvent> events,
                                     std::span<const NodeId> listeners,
                                     std::span<const Point> positions,
                                     const DerivedParams& params);

/// All events must share one slot. Received outcomes pass through the noise
/// model, drawn in listener order.
std::vector<RxOutcome> resolve_slot(std::span<const TxEvent> events,
                                    std::span<const NodeId> listeners,
                                    std::span<const Point> positions,
                                    const DerivedParams& params,
                                    const NoiseModel& noise,
                                    Rng& rng,
                                    std::span<const TxEvent> history = {});

// --- scheduling -----------------------------------------------------------

struct ScheduleClass {
  std::size_t color = 0;
  std::vector<CellId> cells;
};

inline std::size_t cell_color(std::size_t row, std::size_t col, std::size_t reuse) {
  return (row % reuse) * reuse + (col % reuse);
}

/// Tiling coloring with reuse distance D in both axes: exactly D^2 classes
/// (some may be empty when m < D).
std::vector<ScheduleClass> color_cells(std::span<const Cell> cells, const DerivedParams& params);

enum class LinkDirection : std::uint8_t { East, West, South, North };

/// Direction of travel from cell `from` to the grid-adjacent cell `to`.
LinkDirection link_direction(CellId from, CellId to, std::size_t m);

/// Color of a directed inter-cell link in [0, 4 D^2) = [0, k5).
std::size_t link_color(CellId from, CellId to, std::size_t m, std::size_t reuse);

// --- accounting -----------------------------------------------------------

struct EnergyConfig {
  double e_t = 1.0;
  double e_r = 0.5;
};

enum class StageTag : std::uint8_t { Stage1 = 0, Stage2 = 1, Distribution = 2 };
inline constexpr std::size_t kStageCount = 3;

enum class Phase : std::uint8_t {
  Discovery,
  Identity,
  Confirmation,
  HistCollect,
  InterCell,
  DistributeDown,
  DistributeBroadcast,
};

StageTag stage_of(Phase phase);
std::string_view phase_name(Phase phase);

struct StageCounters {
  std::uint64_t slots = 0;
  std::uint64_t tx = 0;
  std::uint64_t rx = 0;
  double em1 = 0.0;
  double em2 = 0.0;
};

struct Metrics {
  EnergyConfig energy;
  std::array<StageCounters, kStageCount> stages{};

  StageCounters& at(StageTag s) { return stages[static_cast<std::size_t>(s)]; }
  const StageCounters& at(StageTag s) const { return stages[static_cast<std::size_t>(s)]; }

  std::uint64_t slots_stage1() const { return at(StageTag::Stage1).slots; }
  std::uint64_t slots_stage2() const { return at(StageTag::Stage2).slots; }
  std::uint64_t slots_total() const;
  std::uint64_t tx_count() const;
  std::uint64_t rx_count() const;
  double em1() const;
  double em2() const;

  /// |em1 - (E_t tx + E_r rx)| and |em2 - E_t tx| relative to their scale.
  bool energy_identities_hold(double rel_tol = 1e-9) const;
};

/// Adds |events| transmissions and one reception per listener whose outcome
/// is a delivery or a collision.
void account(Metrics& metrics, StageTag stage, std::span<const TxEvent> events,
             std::span<const RxOutcome> outcomes);
void account(Metrics& metrics, StageTag stage, std::uint64_t tx, std::uint64_t rx);

// --- slot engine ----------------------------------------------------------

struct TraceRecord {
  std::uint64_t slot = 0;
  Phase phase = Phase::Discovery;
  std::vector<TxEvent> events;
  std::vector<NodeId> listeners;  // intended receivers
  std::vector<RxOutcome> outcomes;
  std::uint64_t cum_tx = 0;
  std::uint64_t cum_rx = 0;
  double cum_em1 = 0.0;
  double cum_em2 = 0.0;
};

struct Trace {
  std::vector<TraceRecord> records;
  std::vector<std::uint64_t> charged_tx;  // abstract-mode charges, by call
};

/// Resolves transmissions against the geometry and noise model, charges
/// metrics, and optionally records a trace. Single-threaded.
class SlotEngine {
 public:
  SlotEngine(std::span<const Point> positions, const DerivedParams& params, NoiseModel noise, Rng& rng,
             EnergyConfig energy = {});

  /// Transmit `events` simultaneously at `slot`; returns one outcome per
  /// listener, aligned with `listeners`.
  std::vector<RxOutcome> transmit(std::uint64_t slot, Phase phase, std::span<const TxEvent> events,
                                  std::span<const NodeId> listeners);

  /// Charge transmissions that are not simulated bit-by-bit.
  void charge(Phase phase, std::uint64_t tx, std::uint64_t rx);
  void add_slots(StageTag stage, std::uint64_t slots) { metrics_.at(stage).slots += slots; }

  void enable_trace() { tracing_ = true; }
  const Trace& trace() const { return trace_; }
  Metrics& metrics() { return metrics_; }
  const Metrics& metrics() const { return metrics_; }
  Rng& rng() { return rng_; }
  const NoiseModel& noise() const { return noise_; }
  const DerivedParams& params() const { return params_; }
  std::span<const Point> positions() const { return positions_; }

 private:
  std::span<const Point> positions_;
  DerivedParams params_;
  NoiseModel noise_;
  Rng& rng_;
  Metrics metrics_;
  bool tracing_ = false;
  Trace trace_;
  std::vector<TxEvent> history_;  // kept only for adversarial noise
};

}  // namespace noisynet
