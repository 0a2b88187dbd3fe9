// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "d2dsim/config.hpp"
#include "d2dsim/manifest.hpp"
#include "d2dsim/metrics.hpp"
#include "d2dsim/simulator.hpp"
#include "d2dsim/sweep.hpp"
#include "d2dsim/synth.hpp"

namespace fs = std::filesystem;

namespace d2dsim {
namespace {

/// Flags shared by every subcommand that builds a configuration.
struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::string> seed;
  std::optional<std::string> strategy;
  std::optional<std::string> scenario;
  std::optional<std::string> mapping;
  std::optional<std::string> alpha;
  std::optional<std::string> migration_norm;
  std::optional<std::string> jobs;
  std::vector<std::string> sets;
  bool dump_tables = false;

  void attach(CLI::App* app, bool with_jobs) {
    app->add_option("--config", config, "key = value configuration file");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--strategy", strategy, "proposed | movement | popularity | none");
    app->add_option("--scenario", scenario, "indoor | outdoor");
    app->add_option("--mapping", mapping, "independent | social_rank | social_mobility_rank");
    app->add_option("--alpha", alpha, "learned | a fixed value in [0,1]");
    app->add_option("--migration-norm", migration_norm, "paper_column | row");
    app->add_option("--set", sets, "extra key=value override (repeatable)");
    app->add_flag("--dump-tables", dump_tables, "write the final slot's model tables");
    if (with_jobs) app->add_option("--jobs", jobs, "parallel sweep points");
  }

  RunConfig resolve() const {
    Settings settings;
    if (config) settings = load_settings(*config);
    auto put = [&](const char* key, const std::optional<std::string>& v) {
      if (v) settings.emplace_back(key, *v);
    };
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
      settings.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    put("scenario", scenario);
    put("seed", seed);
    put("strategy", strategy);
    put("mapping", mapping);
    put("alpha", alpha);
    put("migration_norm", migration_norm);
    put("jobs", jobs);
    if (dump_tables) settings.emplace_back("dump_tables", "true");
    RunConfig cfg;
    apply_settings(cfg, settings);
    cfg.experiment.synth.validate();
    cfg.experiment.sim.validate();
    return cfg;
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct OutputSet {
  fs::path dir;
  std::vector<std::string> files;

  std::ofstream open(const std::string& name) {
    files.push_back(name);
    return open_out(dir / name);
  }
  std::vector<std::pair<std::string, std::string>> digests() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : files) out.emplace_back(f, sha256_file(dir / f));
    return out;
  }
};

RunManifest start_manifest(const std::string& command, const RunConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.config = canonical_config(cfg);
  m.config_digest = sha256_hex(m.config);
  m.seed = cfg.seed();
  m.started_utc = utc_now();
  return m;
}

void finish_manifest(RunManifest& m, const OutputSet& outputs) {
  m.outputs = outputs.digests();
  m.finished_utc = utc_now();
  write_manifest(outputs.dir / "manifest.json", m);
}

/// Traces from files when given, otherwise generated from the config.
Scenario load_scenario(const RunConfig& cfg, RunManifest& manifest) {
  if (cfg.social_trace.has_value() != cfg.mobility_trace.has_value()) {
    throw std::invalid_argument("--social and --mobility must be given together");
  }
  if (!cfg.social_trace) return make_scenario(cfg.experiment, cfg.seed());
  const auto social = load_social_trace(*cfg.social_trace);
  const auto mobility = load_mobility_trace(*cfg.mobility_trace);
  validate_associations(mobility.events);
  manifest.inputs.emplace_back(cfg.social_trace->string(), sha256_file(*cfg.social_trace));
  manifest.inputs.emplace_back(cfg.mobility_trace->string(), sha256_file(*cfg.mobility_trace));
  const auto mapping = map_users(social, mobility, cfg.experiment.mapping, cfg.seed());
  return build_scenario(social, mobility, mapping);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_synth(const CommonFlags& flags, const std::string& out_dir, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  SynthConfig s = cfg.experiment.synth;
  s.seed = cfg.seed();
  RunManifest manifest = start_manifest("synth", cfg);
  const auto traces = gen_traces(s);
  OutputSet outputs{out_dir, {}};
  fs::create_directories(outputs.dir);
  {
    auto f = outputs.open("social.txt");
    write_social_trace(f, traces.social);
  }
  {
    auto f = outputs.open("mobility.txt");
    write_mobility_trace(f, traces.mobility);
  }
  finish_manifest(manifest, outputs);
  out << "synth: " << traces.social.events.size() << " share events, " << traces.mobility.events.size()
      << " associations -> " << outputs.dir.string() << '\n';
  return kExitOk;
}

int cmd_run(const CommonFlags& flags, const std::string& out_dir, std::optional<std::string> social,
            std::optional<std::string> mobility, std::ostream& out) {
  RunConfig cfg = flags.resolve();
  if (social) cfg.social_trace = *social;
  if (mobility) cfg.mobility_trace = *mobility;
  RunManifest manifest = start_manifest("run", cfg);
  const Scenario scenario = load_scenario(cfg, manifest);
  const auto run = run_experiment(scenario, cfg.experiment, cfg.seed(), cfg.experiment.sim.strategy);

  OutputSet outputs{out_dir, {}};
  fs::create_directories(outputs.dir);
  {
    auto f = outputs.open("outcomes.csv");
    write_outcome_log(f, run.result.outcomes);
  }
  {
    auto f = outputs.open("metrics.csv");
    write_metrics_summary(f, run.metrics);
  }
  {
    auto f = outputs.open("series.csv");
    write_metrics_series(f, run.metrics);
  }
  {
    auto f = outputs.open("contributions.csv");
    write_contributions(f, run.metrics);
  }
  if (run.result.tables) {
    write_tables(outputs.dir / "tables", *run.result.tables);
    for (const char* name : {"influence.csv", "preference.csv", "migration.csv", "popularity.csv", "mobility.csv"}) {
      outputs.files.push_back(std::string("tables/") + name);
    }
  }
  finish_manifest(manifest, outputs);
  out << "run: strategy " << run.metrics.strategy << ", " << run.metrics.requests << " requests, d2d fraction "
      << run.metrics.d2d_fraction << " -> " << outputs.dir.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags, const std::string& out_dir, const std::string& axis_name,
              const std::string& values_text, const std::optional<std::string>& seeds, std::ostream& out) {
  RunConfig cfg = flags.resolve();
  if (seeds) apply_settings(cfg, {{"seeds", *seeds}});
  const SweepAxis axis = parse_sweep_axis(axis_name);
  std::vector<std::string> values = split_list(values_text);
  if (values.empty() && axis == SweepAxis::friend_distance) values = default_friend_distance_bins();
  if (values.empty()) throw std::invalid_argument("--values is required for axis " + axis_name);

  RunManifest manifest = start_manifest("sweep " + axis_name + " " + values_text, cfg);
  const auto result = run_sweep(axis, values, cfg.experiment);
  OutputSet outputs{out_dir, {}};
  fs::create_directories(outputs.dir);
  {
    auto f = outputs.open("sweep_" + axis_name + ".csv");
    write_sweep(f, result);
  }
  {
    auto f = outputs.open("sweep_" + axis_name + "_long.csv");
    write_sweep_long(f, result);
  }
  finish_manifest(manifest, outputs);
  write_sweep(out, result);
  return kExitOk;
}

int cmd_report(const CommonFlags& flags, const std::string& log_path, std::optional<std::size_t> users,
               const std::optional<std::string>& out_dir, std::ostream& out) {
  const RunConfig cfg = flags.resolve();
  std::ifstream in(log_path);
  if (!in) throw std::runtime_error("cannot open " + log_path);
  const auto log = read_outcome_log(in);
  MetricsReport m = compute_metrics(log, users.value_or(0), cfg.experiment.sim.slot_length_s,
                                    cfg.experiment.sim.horizon_slots);
  if (flags.strategy) m.strategy = *flags.strategy;
  if (out_dir) {
    fs::create_directories(*out_dir);
    auto f = open_out(fs::path(*out_dir) / "metrics.csv");
    write_metrics_summary(f, m);
    auto s = open_out(fs::path(*out_dir) / "series.csv");
    write_metrics_series(s, m);
    auto c = open_out(fs::path(*out_dir) / "contributions.csv");
    write_contributions(c, m);
  }
  write_metrics_summary(out, m);
  return kExitOk;
}

int cmd_validate(const std::optional<std::string>& social, const std::optional<std::string>& mobility,
                 std::ostream& out) {
  if (!social && !mobility) throw std::invalid_argument("validate needs --social and/or --mobility");
  if (social) {
    const auto trace = load_social_trace(*social);
    out << "social: " << trace.n_users << " users, " << trace.events.size() << " share events, "
        << trace.graph.edge_count() << " edges, " << trace.non_friend_reshares << " non-friend reshares\n";
  }
  if (mobility) {
    const auto trace = load_mobility_trace(*mobility);
    validate_associations(trace.events);
    out << "mobility: " << trace.n_users << " users, " << trace.region_count() << " regions, "
        << trace.events.size() << " associations\n";
  }
  out << "ok\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trace-driven simulator for D2D replication of social content"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  CommonFlags synth_flags, run_flags, sweep_flags, report_flags;
  std::string synth_out = "synth_out";
  auto* synth = app.add_subcommand("synth", "generate synthetic social and mobility traces");
  synth_flags.attach(synth, false);
  synth->add_option("--out", synth_out, "output directory");

  std::string run_out = "run_out";
  std::optional<std::string> run_social, run_mobility;
  auto* run = app.add_subcommand("run", "run one simulation");
  run_flags.attach(run, false);
  run->add_option("--out", run_out, "output directory");
  run->add_option("--social", run_social, "social trace file");
  run->add_option("--mobility", run_mobility, "mobility trace file");

  std::string sweep_out = "sweep_out";
  std::string axis;
  std::string values;
  std::optional<std::string> seeds;
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep for every strategy");
  sweep_flags.attach(sweep, true);
  sweep->add_option("--axis", axis, "sweep axis")->required();
  sweep->add_option("--values", values, "comma-separated axis values");
  sweep->add_option("--seeds", seeds, "comma-separated seeds");
  sweep->add_option("--out", sweep_out, "output directory");

  std::string log_path;
  std::optional<std::size_t> users;
  std::optional<std::string> report_out;
  auto* report = app.add_subcommand("report", "recompute metrics from an outcome log");
  report_flags.attach(report, false);
  report->add_option("--log", log_path, "outcome log")->required();
  report->add_option("--users", users, "user count for the contribution table");
  report->add_option("--out", report_out, "output directory");

  std::optional<std::string> val_social, val_mobility;
  auto* validate = app.add_subcommand("validate", "check trace files");
  validate->add_option("--social", val_social, "social trace file");
  validate->add_option("--mobility", val_mobility, "mobility trace file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_flags, synth_out, out);
    if (run->parsed()) return cmd_run(run_flags, run_out, run_social, run_mobility, out);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_out, axis, values, seeds, out);
    if (report->parsed()) return cmd_report(report_flags, log_path, users, report_out, out);
    if (validate->parsed()) return cmd_validate(val_social, val_mobility, out);
  } catch (const ParseError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace d2dsim
