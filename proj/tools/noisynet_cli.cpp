#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "noisynet/errors.hpp"
#include "noisynet/harness.hpp"

using namespace noisynet;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitAudit = 4;

struct Overrides {
  std::string config_path;
  std::string out_path;
  std::string csv_path;
  std::optional<std::string> protocol, mode, noise, bits;
  std::vector<std::size_t> n;
  std::optional<std::size_t> trials, c_rep, l1_factor, d_max, treecode_alphabet, code_search, max_resamples, threads;
  std::optional<std::uint64_t> seed, treecode_seed, code_seed;
  std::optional<double> eps0, delta, eps1, r2_factor, r3_factor, gamma, k_rs, l_sub_factor, e_t, e_r;
  bool distribute = false;
};

void add_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON experiment config (kebab-case keys)");
  app->add_option("--out", o.out_path, "Write the JSON report here");
  app->add_option("--csv", o.csv_path, "Write the sweep table as CSV here");
  app->add_option("--protocol", o.protocol, "max or hist");
  app->add_option("--n", o.n, "Network sizes")->delimiter(',');
  app->add_option("--trials", o.trials, "Trials per n");
  app->add_option("--seed", o.seed, "Base seed");
  app->add_option("--eps0", o.eps0, "Channel flip probability bound");
  app->add_option("--delta", o.delta, "Interference guard factor");
  app->add_option("--mode", o.mode, "repetition, treecode or abstract");
  app->add_option("--noise", o.noise, "iid or adversarial");
  app->add_option("--bits", o.bits, "all-zero, all-one, single-one or bernoulli(p)");
  app->add_option("--eps1", o.eps1);
  app->add_option("--c-rep", o.c_rep);
  app->add_option("--r2-factor", o.r2_factor);
  app->add_option("--l1-factor", o.l1_factor);
  app->add_option("--r3-factor", o.r3_factor);
  app->add_option("--gamma", o.gamma);
  app->add_option("--k-rs", o.k_rs);
  app->add_option("--d-max", o.d_max);
  app->add_option("--l-sub-factor", o.l_sub_factor);
  app->add_option("--treecode-alphabet", o.treecode_alphabet);
  app->add_option("--treecode-seed", o.treecode_seed);
  app->add_option("--code-seed", o.code_seed);
  app->add_option("--code-search", o.code_search);
  app->add_option("--e-t", o.e_t);
  app->add_option("--e-r", o.e_r);
  app->add_flag("--distribute", o.distribute, "Send the result back to every node");
  app->add_option("--max-resamples", o.max_resamples);
  app->add_option("--threads", o.threads, "Worker threads, 0 for all cores");
}

ExperimentConfig build_config(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("config: cannot open " + o.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    c = config_from_json(ss.str());
  }
  if (o.protocol) c.protocol = parse_protocol(*o.protocol);
  if (o.mode) {
    try {
      c.mode = parse_mode(*o.mode);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("mode: ") + e.what());
    }
  }
  if (o.noise) {
    if (*o.noise == "iid") c.noise = NoiseMode::Iid;
    else if (*o.noise == "adversarial") c.noise = NoiseMode::Adversarial;
    else throw ConfigError("noise: unknown model '" + *o.noise + "'");
  }
  if (o.bits) c.bits = BitSource::parse(*o.bits);
  if (!o.n.empty()) c.n_values = o.n;
  if (o.trials) c.trials = *o.trials;
  if (o.seed) c.seed = *o.seed;
  if (o.eps0) c.eps0 = *o.eps0;
  if (o.delta) c.delta = *o.delta;
  if (o.eps1) c.eps1 = *o.eps1;
  if (o.c_rep) c.c_rep = *o.c_rep;
  if (o.r2_factor) c.r2_factor = *o.r2_factor;
  if (o.l1_factor) c.l1_factor = *o.l1_factor;
  if (o.r3_factor) c.r3_factor = *o.r3_factor;
  if (o.gamma) c.gamma = *o.gamma;
  if (o.k_rs) c.k_rs = *o.k_rs;
  if (o.d_max) c.d_max = *o.d_max;
  if (o.l_sub_factor) c.l_sub_factor = *o.l_sub_factor;
  if (o.treecode_alphabet) c.treecode_alphabet = *o.treecode_alphabet;
  if (o.treecode_seed) c.treecode_seed = *o.treecode_seed;
  if (o.code_seed) c.code_seed = *o.code_seed;
  if (o.code_search) c.code_search = *o.code_search;
  if (o.e_t) c.energy.e_t = *o.e_t;
  if (o.e_r) c.energy.e_r = *o.e_r;
  if (o.distribute) c.distribute = true;
  if (o.max_resamples) c.max_resamples = *o.max_resamples;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

void print_summary(const RunReport& r) {
  for (const auto& a : r.aggregates) {
    std::printf("n=%zu trials=%zu errors=%zu error_rate=%.4f ci=[%.4f,%.4f] slots=%.1f tx=%.1f em1=%.1f stage1_errors=%zu resamples=%zu\n",
                a.n, a.trials, a.errors, a.error_rate, a.error_ci.lo, a.error_ci.hi, a.mean_slots_total,
                a.mean_tx_total, a.mean_em1, a.stage1_errors, a.resamples);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noisy-channel in-network MAX and histogram simulator"};
  app.require_subcommand(1);
  Overrides run_o, sweep_o, validate_o;
  auto* run = app.add_subcommand("run", "Run trials and compare against the oracle");
  auto* sw = app.add_subcommand("sweep", "Scaling sweep over several n");
  auto* val = app.add_subcommand("validate", "Interference, obliviousness and energy audit");
  add_options(run, run_o);
  add_options(sw, sweep_o);
  add_options(val, validate_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) {
      const auto cfg = build_config(run_o);
      const auto report = run_experiment(cfg);
      print_summary(report);
      if (!run_o.out_path.empty()) write_file(run_o.out_path, report_json(report));
      if (!run_o.csv_path.empty()) write_file(run_o.csv_path, sweep_csv(report));
    } else if (sw->parsed()) {
      const auto cfg = build_config(sweep_o);
      const auto report = sweep(cfg);
      const std::string csv = sweep_csv(report);
      std::fputs(csv.c_str(), stdout);
      const auto& b = *report.bands;
      std::printf("band tx_per_n=%.3f slots_norm=%.3f stage2_norm=%.3f stage2_rep_norm=%.3f em1_stage1_norm=%.3f "
                  "stage2_tx_per_n=%.3f\n",
                  b.tx_per_n, b.slots_norm, b.slots_stage2_norm, b.slots_stage2_rep_norm, b.em1_stage1_norm,
                  b.tx_stage2_per_n);
      if (!sweep_o.out_path.empty()) write_file(sweep_o.out_path, report_json(report));
      if (!sweep_o.csv_path.empty()) write_file(sweep_o.csv_path, csv);
    } else if (val->parsed()) {
      const auto cfg = build_config(validate_o);
      const auto audit = validate_run(cfg);
      std::printf("collisions %s\noblivious %s\nenergy %s\ncoloring %s\ngeometry %s\nslots checked %zu, "
                  "confirmation records exempt %zu\n",
                  audit.collisions_ok ? "ok" : "FAIL", audit.oblivious_ok ? "ok" : "FAIL",
                  audit.energy_ok ? "ok" : "FAIL", audit.coloring_ok ? "ok" : "FAIL",
                  audit.geometry_ok ? "ok" : "FAIL", audit.slots_checked, audit.confirmation_exempt);
      for (const auto& f : audit.failures) std::printf("  %s\n", f.c_str());
      if (!validate_o.out_path.empty()) {
        std::ostringstream s;
        s << "{\n  \"schema\": 1,\n  \"ok\": " << (audit.ok() ? "true" : "false") << ",\n  \"failures\": "
          << audit.failures.size() << "\n}";
        write_file(validate_o.out_path, s.str());
      }
      if (!audit.ok()) return kExitAudit;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
