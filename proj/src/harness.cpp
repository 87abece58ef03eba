#include "noisynet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "noisynet/errors.hpp"

namespace noisynet {

std::string_view protocol_name(Protocol p) { return p == Protocol::Max ? "max" : "hist"; }

Protocol parse_protocol(std::string_view name) {
  if (name == "max") return Protocol::Max;
  if (name == "hist") return Protocol::Hist;
  throw ConfigError("unknown protocol '" + std::string(name) + "' (expected max or hist)");
}

// --- bit sources ---------------------------------------------------------------

BitSource BitSource::parse(std::string_view text) {
  BitSource b;
  if (text == "all-zero") {
    b.kind = Kind::AllZero;
  } else if (text == "all-one") {
    b.kind = Kind::AllOne;
  } else if (text == "single-one") {
    b.kind = Kind::SingleOne;
  } else if (text.starts_with("bernoulli(") && text.ends_with(")")) {
    b.kind = Kind::Bernoulli;
    const std::string inner(text.substr(10, text.size() - 11));
    std::size_t used = 0;
    try {
      b.p = std::stod(inner, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != inner.size()) throw ConfigError("bits: bad bernoulli parameter '" + inner + "'");
    if (!(b.p >= 0.0 && b.p <= 1.0)) throw ConfigError("bits: bernoulli parameter must lie in [0, 1]");
  } else {
    throw ConfigError("bits: unknown source '" + std::string(text) +
                      "' (all-zero, all-one, single-one, bernoulli(p) or an explicit list)");
  }
  return b;
}

std::string BitSource::name() const {
  switch (kind) {
    case Kind::AllZero: return "all-zero";
    case Kind::AllOne: return "all-one";
    case Kind::SingleOne: return "single-one";
    case Kind::Bernoulli: {
      std::ostringstream s;
      s << "bernoulli(" << p << ")";
      return s.str();
    }
    case Kind::Explicit: return "list";
  }
  return "?";
}

void BitSource::fill(NetworkInstance& instance, Rng& rng) const {
  const std::size_t n = instance.n;
  auto& bits = instance.bits;
  bits.assign(n, 0);
  switch (kind) {
    case Kind::AllZero: break;
    case Kind::AllOne: std::fill(bits.begin(), bits.end(), 1); break;
    case Kind::SingleOne:
      if (n > 0) bits[rng.below(n)] = 1;
      break;
    case Kind::Bernoulli:
      for (auto& b : bits) b = rng.bernoulli(p) ? 1 : 0;
      break;
    case Kind::Explicit:
      if (list.empty()) throw ConfigError("bits: explicit list is empty");
      for (std::size_t i = 0; i < n; ++i) bits[i] = list[i % list.size()] ? 1 : 0;
      break;
  }
}

// --- config --------------------------------------------------------------------

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

bool power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

void ExperimentConfig::validate() const {
  require(!n_values.empty(), "n: at least one value required");
  for (std::size_t n : n_values) {
    require(n >= 16, "n: every value must be at least 16 (got " + std::to_string(n) + ")");
    require(n <= (std::size_t{1} << 22), "n: values above 2^22 are not supported");
  }
  require(trials >= 1, "trials: must be at least 1");
  require(eps0 >= 0.0 && eps0 < 0.5, "eps0: must lie in [0, 0.5)");
  require(delta >= 0.0 && std::isfinite(delta), "delta: must be non-negative");
  require(eps1 > 0.0 && eps1 < 1.0, "eps1: must lie in (0, 1)");
  require(c_rep >= 1 && c_rep % 2 == 1, "c-rep: must be odd");
  require(r2_factor > 0.0, "r2-factor: must be positive");
  require(l1_factor >= 1, "l1-factor: must be at least 1");
  require(r3_factor > 0.0, "r3-factor: must be positive");
  require(gamma > 0.0, "gamma: must be positive");
  require(k_rs >= 1.0, "k-rs: must be at least 1");
  require(d_max >= 1 && d_max <= 24, "d-max: must lie in [1, 24]");
  require(l_sub_factor > 0.0, "l-sub-factor: must be positive");
  require(power_of_two(treecode_alphabet) && treecode_alphabet >= 4 && treecode_alphabet <= 1024,
          "treecode-alphabet: must be a power of two in [4, 1024]");
  require(code_search >= 1, "code-search: must be at least 1");
  require(energy.e_t >= 0.0 && energy.e_r >= 0.0, "e-t, e-r: must be non-negative");
  if (bits.kind == BitSource::Kind::Bernoulli) require(bits.p >= 0.0 && bits.p <= 1.0, "bits: p must lie in [0, 1]");
  if (bits.kind == BitSource::Kind::Explicit) {
    require(!bits.list.empty(), "bits: explicit list is empty");
    for (auto b : bits.list) require(b <= 1, "bits: explicit list entries must be 0 or 1");
  }
  if (majority_error_bound(c_rep, eps0) > eps1) {
    throw ConfigError("c-rep: " + std::to_string(c_rep) + " repeats miss the eps1 budget at eps0 = " +
                      std::to_string(eps0));
  }
}

// --- per-n context -------------------------------------------------------------

Stage1Config SizeContext::stage1(const ExperimentConfig& cfg) const {
  Stage1Config s;
  s.eps1 = cfg.eps1;
  s.c_rep = cfg.c_rep;
  s.r2 = r2;
  s.id_code = id_code.get();
  return s;
}

Stage2Config SizeContext::stage2(const ExperimentConfig& cfg) const {
  Stage2Config s;
  s.sim.mode = cfg.mode;
  s.sim.r3 = r3;
  s.sim.gamma = cfg.gamma;
  s.sim.k_rs = cfg.k_rs;
  s.sim.d_max = cfg.d_max;
  s.sim.tree_code = tree_code.get();
  s.sim.eps0 = cfg.eps0;
  s.g = g;
  return s;
}

SizeContext make_context(const ExperimentConfig& cfg, std::size_t n) {
  SizeContext ctx;
  ctx.n = n;
  ctx.params = derive_params(n, cfg.delta);
  ctx.r2 = log_repeats(n, cfg.r2_factor);
  ctx.r3 = log_repeats(n, cfg.r3_factor);
  ctx.l_sub = substage_levels(n, cfg.l_sub_factor);
  ctx.g = log2_ceil(n + 1);
  const std::size_t k = log2_ceil(n);
  ctx.id_code = std::make_shared<const BlockCode>(BlockCode::search(k, cfg.l1_factor * k, cfg.code_seed, cfg.code_search));

  if (cfg.mode == SimMode::TreeCode) {
    // The sink is the node nearest the middle, so its cell is the middle one
    // up to a tie on even m; both candidates give the same array lengths.
    const std::size_t m = ctx.params.m;
    const SpanningTree tree = build_tree(m, cell_index(m / 2, m / 2, m));
    const SubstagePlan plan = build_substages(tree, ctx.l_sub);
    const std::size_t rounds = plan_max_rounds(plan, cfg.protocol == Protocol::Hist, ctx.g);
    if (rounds > cfg.d_max) {
      throw InfeasibleError("treecode mode at n = " + std::to_string(n) + ": arrays need " + std::to_string(rounds) +
                            " noiseless rounds but the tree-code decoder is capped at d-max = " +
                            std::to_string(cfg.d_max));
    }
    ctx.tree_code = std::make_shared<const TreeCode>(cfg.d_max, cfg.treecode_alphabet, cfg.treecode_seed);
  }
  return ctx;
}

// --- trials --------------------------------------------------------------------

std::uint64_t trial_seed(std::uint64_t base, std::size_t n, std::size_t trial) { return derive_seed(base, n, trial); }

World build_world(const ExperimentConfig& cfg, const SizeContext& ctx, Rng& rng) {
  World w;
  for (;;) {
    w.instance = place_nodes(ctx.n, rng);
    try {
      w.cells = assign_cells(w.instance, ctx.params);
      break;
    } catch (const InfeasibleError& e) {
      if (w.resamples >= cfg.max_resamples) {
        throw InfeasibleError("n = " + std::to_string(ctx.n) + ": gave up after " + std::to_string(w.resamples) +
                              " resamples (" + e.what() + ")");
      }
      ++w.resamples;
    }
  }
  cfg.bits.fill(w.instance, rng);
  w.tree = build_tree(w.cells, ctx.params);
  w.classes = color_cells(w.cells, ctx.params);
  w.plan = build_substages(w.tree, ctx.l_sub);
  return w;
}

TrialOutput run_trial(const ExperimentConfig& cfg, const SizeContext& ctx, std::size_t trial, const TrialOptions& opts) {
  TrialOutput out;
  auto& rec = out.record;
  rec.n = ctx.n;
  rec.trial = trial;
  rec.seed = trial_seed(cfg.seed, ctx.n, trial);
  Rng rng(rec.seed);

  out.world = build_world(cfg, ctx, rng);
  World& w = out.world;
  if (opts.complement_bits) {
    for (auto& b : w.instance.bits) b ^= 1U;
  }
  rec.resamples = w.resamples;
  rec.oracle = oracle(w.instance, cfg.protocol);

  const Stage1Config s1 = ctx.stage1(cfg);
  const Stage2Config s2 = ctx.stage2(cfg);
  if (cfg.mode == SimMode::TreeCode) {
    const std::size_t rounds = plan_max_rounds(w.plan, cfg.protocol == Protocol::Hist, ctx.g);
    if (rounds > cfg.d_max) {
      throw InfeasibleError("treecode mode: an array needs " + std::to_string(rounds) + " rounds, above d-max = " +
                            std::to_string(cfg.d_max));
    }
  }

  NoiseModel noise = cfg.noise == NoiseMode::Adversarial ? NoiseModel::constant_adversary(cfg.eps0)
                                                         : NoiseModel::iid(cfg.eps0);
  SlotEngine engine(w.instance.positions, ctx.params, std::move(noise), rng, cfg.energy);
  if (opts.trace) engine.enable_trace();

  const std::span<const std::uint8_t> bits(w.instance.bits);
  Stage2Result r2;
  if (cfg.protocol == Protocol::Max) {
    const auto r1 = run_stage1_max(w.cells, w.classes, bits, s1, engine);
    const bool any = std::any_of(r1.value.begin(), r1.value.end(), [](std::uint8_t v) { return v != 0; });
    rec.stage1_error = (any ? 1U : 0U) != rec.oracle;
    r2 = run_stage2_max(w.plan, w.tree, w.cells, r1.value, s2, engine);
  } else {
    const auto r1 = run_stage1_hist(w.cells, w.classes, bits, s1, engine);
    std::uint64_t total = 0;
    for (auto c : r1.count) total += c;
    rec.stage1_error = total != rec.oracle;
    r2 = run_stage2_hist(w.plan, w.tree, w.cells, r1.count, s2, engine);
  }
  rec.value = r2.sink_value;
  rec.correct = rec.value == rec.oracle;
  rec.corruptions = r2.corruptions;

  if (cfg.distribute) {
    const std::size_t width = cfg.protocol == Protocol::Max ? 1 : ctx.g;
    const auto d = distribute_result(w.plan, w.tree, w.cells, w.classes, rec.value, width, ctx.r2, s2, engine);
    rec.wrong_nodes = static_cast<std::size_t>(
        std::count_if(d.node_value.begin(), d.node_value.end(), [&](std::uint64_t v) { return v != rec.oracle; }));
  }
  rec.metrics = engine.metrics();
  if (opts.trace) out.trace = engine.trace();
  return out;
}

// --- aggregation ---------------------------------------------------------------

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double nt = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / nt;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nt;
  const double centre = (p + z2 / (2.0 * nt)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Aggregate aggregate(std::size_t n, const std::vector<TrialRecord>& records) {
  Aggregate a;
  a.n = n;
  double k = 0;
  for (const auto& r : records) {
    if (r.n != n) continue;
    ++a.trials;
    k += 1;
    a.errors += r.correct ? 0 : 1;
    a.stage1_errors += r.stage1_error ? 1 : 0;
    a.resamples += r.resamples;
    const auto& m = r.metrics;
    a.mean_slots_total += static_cast<double>(m.slots_total());
    a.mean_slots_stage1 += static_cast<double>(m.slots_stage1());
    a.mean_slots_stage2 += static_cast<double>(m.slots_stage2());
    a.mean_slots_distribution += static_cast<double>(m.at(StageTag::Distribution).slots);
    a.mean_tx_total += static_cast<double>(m.tx_count());
    a.mean_tx_stage1 += static_cast<double>(m.at(StageTag::Stage1).tx);
    a.mean_tx_stage2 += static_cast<double>(m.at(StageTag::Stage2).tx);
    a.mean_rx_total += static_cast<double>(m.rx_count());
    a.mean_em1 += m.em1();
    a.mean_em2 += m.em2();
    a.mean_em1_stage1 += m.at(StageTag::Stage1).em1;
    a.max_slots_total = std::max(a.max_slots_total, m.slots_total());
    a.max_tx_total = std::max(a.max_tx_total, m.tx_count());
  }
  if (a.trials > 0) {
    for (double* v : {&a.mean_slots_total, &a.mean_slots_stage1, &a.mean_slots_stage2, &a.mean_slots_distribution,
                      &a.mean_tx_total, &a.mean_tx_stage1, &a.mean_tx_stage2, &a.mean_rx_total, &a.mean_em1,
                      &a.mean_em2, &a.mean_em1_stage1}) {
      *v /= k;
    }
    a.error_rate = static_cast<double>(a.errors) / k;
  }
  a.error_ci = wilson_interval(a.errors, a.trials);
  return a;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RunReport report;
  report.config = cfg;
  std::size_t threads = cfg.threads;
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());

  for (std::size_t n : cfg.n_values) {
    const SizeContext ctx = make_context(cfg, n);
    std::vector<TrialRecord> records(cfg.trials);
    std::vector<std::exception_ptr> errors(cfg.trials);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t t; (t = next.fetch_add(1)) < cfg.trials;) {
        try {
          records[t] = run_trial(cfg, ctx, t).record;
        } catch (...) {
          errors[t] = std::current_exception();
        }
      }
    };
    const std::size_t pool = std::min(threads, cfg.trials);
    if (pool <= 1) {
      worker();
    } else {
      std::vector<std::thread> ts;
      for (std::size_t i = 0; i < pool; ++i) ts.emplace_back(worker);
      for (auto& t : ts) t.join();
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    report.aggregates.push_back(aggregate(n, records));
    report.trials.insert(report.trials.end(), records.begin(), records.end());
  }
  return report;
}

SweepRow sweep_row(const Aggregate& agg) {
  SweepRow row;
  row.agg = agg;
  const double n = static_cast<double>(agg.n);
  const double ln = std::log(n);
  row.tx_per_n = agg.mean_tx_total / n;
  row.slots_norm = agg.mean_slots_total / std::sqrt(n / ln);
  row.slots_stage2_norm = agg.mean_slots_stage2 / std::sqrt(n / ln);
  row.slots_stage2_rep_norm = agg.mean_slots_stage2 / std::sqrt(n * ln);
  row.em1_stage1_norm = agg.mean_em1_stage1 / (n * ln);
  row.tx_stage2_per_n = agg.mean_tx_stage2 / n;
  return row;
}

BandRatios band_ratios(const std::vector<SweepRow>& rows) {
  auto ratio = [&](double SweepRow::*field) {
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const auto& r : rows) {
      lo = std::min(lo, r.*field);
      hi = std::max(hi, r.*field);
    }
    if (rows.empty()) return 1.0;
    if (lo <= 0.0) return hi <= 0.0 ? 1.0 : HUGE_VAL;
    return hi / lo;
  };
  BandRatios b;
  b.tx_per_n = ratio(&SweepRow::tx_per_n);
  b.slots_norm = ratio(&SweepRow::slots_norm);
  b.slots_stage2_norm = ratio(&SweepRow::slots_stage2_norm);
  b.slots_stage2_rep_norm = ratio(&SweepRow::slots_stage2_rep_norm);
  b.em1_stage1_norm = ratio(&SweepRow::em1_stage1_norm);
  b.tx_stage2_per_n = ratio(&SweepRow::tx_stage2_per_n);
  return b;
}

RunReport sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> ns = cfg.n_values;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  require(ns.size() >= 3, "sweep: at least 3 distinct values of n required");
  require(ns.back() >= 8 * ns.front(), "sweep: n values must span a factor of 8");
  RunReport report = run_experiment(cfg);
  for (const auto& a : report.aggregates) report.sweep.push_back(sweep_row(a));
  report.bands = band_ratios(report.sweep);
  return report;
}

}  // namespace noisynet
