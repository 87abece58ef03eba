#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "noisynet/channel.hpp"
#include "noisynet/coding.hpp"
#include "noisynet/geometry.hpp"
#include "noisynet/line_sim.hpp"
#include "noisynet/oracle.hpp"
#include "noisynet/stage1.hpp"
#include "noisynet/stage2.hpp"
#include "noisynet/treecode.hpp"

namespace noisynet {

std::string_view protocol_name(Protocol p);
Protocol parse_protocol(std::string_view name);

struct BitSource {
  enum class Kind { AllZero, AllOne, Bernoulli, SingleOne, Explicit };
  Kind kind = Kind::SingleOne;
  double p = 0.5;
  std::vector<std::uint8_t> list;  // Explicit; repeated cyclically if shorter than n

  /// "all-zero", "all-one", "single-one", "bernoulli(p)", "list"
  static BitSource parse(std::string_view text);
  std::string name() const;
  void fill(NetworkInstance& instance, Rng& rng) const;
};

struct ExperimentConfig {
  Protocol protocol = Protocol::Max;
  std::vector<std::size_t> n_values{2000};
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  double eps0 = 0.1;
  double delta = 0.5;
  SimMode mode = SimMode::Abstract;
  NoiseMode noise = NoiseMode::Iid;  // adversarial = constant-eps0 clairvoyant hook
  BitSource bits;

  double eps1 = 0.05;
  std::size_t c_rep = 9;
  double r2_factor = 3.0;      // r2 = smallest odd >= r2_factor ln n
  std::size_t l1_factor = 4;   // L1 = l1_factor * ceil(log2 n)
  double r3_factor = 3.0;      // r3 = smallest odd >= r3_factor ln n
  double gamma = 0.5;
  double k_rs = 3.0;
  std::size_t d_max = kDefaultDecodeCap;
  double l_sub_factor = 1.0;   // L_sub = ceil(l_sub_factor ln n)
  std::size_t treecode_alphabet = 256;
  std::uint64_t treecode_seed = 3;
  std::uint64_t code_seed = 1;
  std::size_t code_search = 8;
  EnergyConfig energy;
  bool distribute = false;
  std::size_t max_resamples = 100;
  std::size_t threads = 0;  // 0 = hardware concurrency

  /// Throws ConfigError on the first invalid field.
  void validate() const;
};

/// Everything derived from n that trials share read-only.
struct SizeContext {
  std::size_t n = 0;
  DerivedParams params;
  std::size_t r2 = 0;
  std::size_t r3 = 0;
  std::size_t l_sub = 0;
  std::size_t g = 0;
  std::shared_ptr<const BlockCode> id_code;
  std::shared_ptr<const TreeCode> tree_code;  // treecode mode only

  Stage1Config stage1(const ExperimentConfig& cfg) const;
  Stage2Config stage2(const ExperimentConfig& cfg) const;
};

/// Throws InfeasibleError when the mode cannot run at this n (tree-code
/// schedule beyond the decode cap).
SizeContext make_context(const ExperimentConfig& cfg, std::size_t n);

/// The sampled world of one trial.
struct World {
  NetworkInstance instance;
  std::vector<Cell> cells;
  SpanningTree tree;
  std::vector<ScheduleClass> classes;
  SubstagePlan plan;
  std::size_t resamples = 0;
};

/// Places nodes, resampling while some cell is empty, then fills bits (in
/// that order on one stream). Throws InfeasibleError after max_resamples.
World build_world(const ExperimentConfig& cfg, const SizeContext& ctx, Rng& rng);

struct TrialRecord {
  std::size_t n = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t resamples = 0;
  std::uint64_t value = 0;
  std::uint64_t oracle = 0;
  bool correct = false;
  bool stage1_error = false;    // max_j f_j != f (MAX) or sum_j n_j != count (hist)
  std::size_t corruptions = 0;  // abstract-mode array failures
  std::size_t wrong_nodes = 0;  // after distribution
  Metrics metrics;
};

struct TrialOptions {
  bool trace = false;
  bool complement_bits = false;
};

struct TrialOutput {
  TrialRecord record;
  std::optional<Trace> trace;
  World world;
};

std::uint64_t trial_seed(std::uint64_t base, std::size_t n, std::size_t trial);

TrialOutput run_trial(const ExperimentConfig& cfg, const SizeContext& ctx, std::size_t trial,
                      const TrialOptions& opts = {});

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Wilson score interval at z (default about 95%).
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96);

struct Aggregate {
  std::size_t n = 0;
  std::size_t trials = 0;
  std::size_t errors = 0;
  double error_rate = 0.0;
  Interval error_ci;
  std::size_t stage1_errors = 0;
  std::size_t resamples = 0;
  double mean_slots_total = 0, mean_slots_stage1 = 0, mean_slots_stage2 = 0, mean_slots_distribution = 0;
  double mean_tx_total = 0, mean_tx_stage1 = 0, mean_tx_stage2 = 0;
  double mean_rx_total = 0;
  double mean_em1 = 0, mean_em2 = 0, mean_em1_stage1 = 0;
  std::uint64_t max_slots_total = 0, max_tx_total = 0;
};

Aggregate aggregate(std::size_t n, const std::vector<TrialRecord>& records);

struct SweepRow {
  Aggregate agg;
  double tx_per_n = 0;
  double slots_norm = 0;               // slots_total / sqrt(n / ln n)
  double slots_stage2_norm = 0;        // slots_stage2 / sqrt(n / ln n)
  double slots_stage2_rep_norm = 0;    // slots_stage2 / sqrt(n ln n)
  double em1_stage1_norm = 0;          // em1_stage1 / (n ln n)
  double tx_stage2_per_n = 0;
};

struct BandRatios {
  double tx_per_n = 0;
  double slots_norm = 0;
  double slots_stage2_norm = 0;
  double slots_stage2_rep_norm = 0;
  double em1_stage1_norm = 0;
  double tx_stage2_per_n = 0;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<TrialRecord> trials;
  std::vector<Aggregate> aggregates;
  std::vector<SweepRow> sweep;      // filled by sweep()
  std::optional<BandRatios> bands;  // filled by sweep()
};

/// Runs every (n, trial); trials run in parallel, results fold in trial
/// order so the report is independent of the thread count.
RunReport run_experiment(const ExperimentConfig& cfg);

/// run_experiment plus normalized scaling columns and their max/min ratios.
/// Requires at least 3 values of n spanning a factor of 8.
RunReport sweep(const ExperimentConfig& cfg);

SweepRow sweep_row(const Aggregate& agg);
BandRatios band_ratios(const std::vector<SweepRow>& rows);

// --- audit ---------------------------------------------------------------------

struct AuditReport {
  bool collisions_ok = true;   // (a)
  bool oblivious_ok = true;    // (b)
  bool energy_ok = true;       // (c)
  bool coloring_ok = true;     // static inter-cell link coloring
  bool geometry_ok = true;
  std::size_t slots_checked = 0;
  std::size_t confirmation_exempt = 0;
  std::vector<std::string> failures;

  bool ok() const { return collisions_ok && oblivious_ok && energy_ok && coloring_ok && geometry_ok; }
};

/// (a) Regroups trace records by (stage, slot) and re-resolves every slot
/// noise-free: each intended receiver must get the transmission of its own
/// record. Confirmation slots are exempt.
void check_collisions(const Trace& trace, std::span<const Point> positions, const DerivedParams& params,
                      AuditReport& report);

/// (b) Transmitter sets per (stage, slot) must agree between two runs that
/// differ only in data, outside the confirmation phase.
void check_oblivious(const Trace& a, const Trace& b, AuditReport& report);

/// (c) Energy identities after every recorded slot.
void check_energy(const Trace& trace, const EnergyConfig& energy, AuditReport& report);

/// Every color class of every stage's links, activated at once, delivers
/// to each receiving center.
void check_link_coloring(const SubstagePlan& plan, std::span<const Cell> cells, std::span<const Point> positions,
                         const DerivedParams& params, bool bidirectional, AuditReport& report);

/// Replays trial 0 of every n with tracing, once more with complemented
/// bits, and runs all checks.
AuditReport validate_run(const ExperimentConfig& cfg);

// --- serialization -------------------------------------------------------------

std::string report_json(const RunReport& report, bool include_trials = true);
std::string sweep_csv(const RunReport& report);
std::string config_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

}  // namespace noisynet
