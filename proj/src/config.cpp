// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace d2dsim {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("bad value for " + key + ": '" + value + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T v{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

template <class T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<std::uint64_t>(key, trim(item)));
  if (out.empty()) bad_value(key, value);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;  // empty: not part of the canonical form
};

#define D2D_DOUBLE(key, expr)                                                                                    \
  {                                                                                                              \
    key, Field {                                                                                                 \
      [](RunConfig& c, const std::string& k, const std::string& v) { c.expr = parse_number<double>(k, v); },     \
          [](const RunConfig& c) { return fmt(c.expr); }                                                         \
    }                                                                                                            \
  }
#define D2D_INT(key, type, expr)                                                                                 \
  {                                                                                                              \
    key, Field {                                                                                                 \
      [](RunConfig& c, const std::string& k, const std::string& v) { c.expr = parse_number<type>(k, v); },       \
          [](const RunConfig& c) { return fmt_int(c.expr); }                                                     \
    }                                                                                                            \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      // Generator.
      D2D_INT("n_users", std::size_t, experiment.synth.n_users),
      D2D_INT("n_regions", std::size_t, experiment.synth.n_regions),
      D2D_DOUBLE("avg_degree", experiment.synth.avg_degree),
      D2D_DOUBLE("lambda_p_min", experiment.synth.lambda_p_min),
      D2D_DOUBLE("lambda_p_max", experiment.synth.lambda_p_max),
      D2D_DOUBLE("reshare_mean_latency_s", experiment.synth.reshare_mean_latency_s),
      D2D_DOUBLE("powerlaw_exponent_edges", experiment.synth.powerlaw_exponent_edges),
      D2D_DOUBLE("reshare_prob_min", experiment.synth.reshare_prob_min),
      D2D_DOUBLE("zipf_exponent_regions", experiment.synth.zipf_exponent_regions),
      D2D_DOUBLE("powerlaw_exponent_migration", experiment.synth.powerlaw_exponent_migration),
      D2D_DOUBLE("crowdedness_min", experiment.synth.crowdedness_min),
      D2D_DOUBLE("crowdedness_max", experiment.synth.crowdedness_max),
      {"target_crowdedness",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.experiment.synth.target_crowdedness = parse_number<double>(k, v);
        },
        [](const RunConfig& c) { return fmt(c.experiment.synth.crowdedness()); }}},
      D2D_DOUBLE("mean_association_s", experiment.synth.mean_association_s),
      D2D_DOUBLE("mean_session_s", experiment.synth.mean_session_s),
      D2D_INT("favored_regions_min", std::size_t, experiment.synth.favored_regions_min),
      D2D_INT("favored_regions_max", std::size_t, experiment.synth.favored_regions_max),
      D2D_DOUBLE("favored_share", experiment.synth.favored_share),
      {"horizon_slots",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.experiment.synth.horizon_slots = c.experiment.sim.horizon_slots = parse_number<std::int64_t>(k, v);
        },
        [](const RunConfig& c) { return fmt_int(c.experiment.sim.horizon_slots); }}},
      {"slot_length_s",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.experiment.synth.slot_length_s = c.experiment.sim.slot_length_s = parse_number<std::int64_t>(k, v);
        },
        [](const RunConfig& c) { return fmt_int(c.experiment.sim.slot_length_s); }}},
      {"scenario",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          const auto keep_h = c.experiment.synth.horizon_slots;
          const auto keep_l = c.experiment.synth.slot_length_s;
          c.experiment.synth = parse_area(v) == Area::indoor ? SynthConfig::indoor() : SynthConfig::outdoor();
          c.experiment.synth.horizon_slots = keep_h;
          c.experiment.synth.slot_length_s = keep_l;
        },
        [](const RunConfig& c) { return std::string(to_string(c.experiment.synth.area)); }}},

      // Engine.
      D2D_INT("request_deadline_s", std::int64_t, experiment.sim.request_deadline_s),
      {"strategy",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.experiment.sim.strategy = parse_strategy(v); },
        [](const RunConfig& c) { return std::string(to_string(c.experiment.sim.strategy)); }}},
      {"strategies",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          std::vector<StrategyKind> list;
          std::stringstream in(v);
          std::string item;
          while (std::getline(in, item, ',')) list.push_back(parse_strategy(trim(item)));
          if (list.empty()) bad_value(k, v);
          c.experiment.strategies = list;
        },
        [](const RunConfig& c) {
          std::string s;
          for (auto k : c.experiment.strategies) s += (s.empty() ? "" : ",") + std::string(to_string(k));
          return s;
        }}},
      D2D_INT("cache_capacity", std::size_t, experiment.sim.peers.cache_capacity),
      D2D_INT("upload_capacity", std::size_t, experiment.sim.peers.upload_capacity),
      {"alpha",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          if (v == "learned") {
            c.experiment.sim.alpha_fixed.reset();
          } else {
            c.experiment.sim.alpha_fixed = parse_number<double>(k, v);
          }
        },
        [](const RunConfig& c) {
          return c.experiment.sim.alpha_fixed ? fmt(*c.experiment.sim.alpha_fixed) : std::string("learned");
        }}},
      {"migration_norm",
       {[](RunConfig& c, const std::string&, const std::string& v) {
          c.experiment.sim.migration_norm = parse_migration_norm(v);
        },
        [](const RunConfig& c) { return std::string(to_string(c.experiment.sim.migration_norm)); }}},
      D2D_INT("influence_window_slots", std::int64_t, experiment.sim.influence_window_slots),
      D2D_INT("preference_window_slots", std::int64_t, experiment.sim.preference_window_slots),
      D2D_INT("share_window_slots", std::int64_t, experiment.sim.share_window_slots),
      D2D_DOUBLE("ewma_factor", experiment.sim.ewma_factor),
      D2D_INT("movement_copies", std::size_t, experiment.sim.movement_copies),
      {"mapping",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.experiment.mapping = parse_mapping_scheme(v); },
        [](const RunConfig& c) { return std::string(to_string(c.experiment.mapping)); }}},
      {"seed",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.experiment.seeds = {parse_number<std::uint64_t>(k, v)};
        },
        {}}},
      {"seeds",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.experiment.seeds = parse_seed_list(k, v); },
        [](const RunConfig& c) {
          std::string s;
          for (auto x : c.experiment.seeds) s += (s.empty() ? "" : ",") + std::to_string(x);
          return s;
        }}},
      {"jobs",
       {[](RunConfig& c, const std::string& k, const std::string& v) {
          c.experiment.jobs = parse_number<std::size_t>(k, v);
        },
        {}}},
      {"dump_tables",
       {[](RunConfig& c, const std::string& k, const std::string& v) { c.experiment.sim.keep_tables = parse_bool(k, v); },
        {}}},
      {"social_trace",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.social_trace = v; },
        {}}},
      {"mobility_trace",
       {[](RunConfig& c, const std::string&, const std::string& v) { c.mobility_trace = v; },
        {}}},
  };
  return table;
}

#undef D2D_DOUBLE
#undef D2D_INT

}  // namespace

Settings read_settings(std::istream& in) {
  Settings out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(n, "expected key = value");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError(n, "empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

Settings load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return read_settings(in);
}

void apply_settings(RunConfig& cfg, const Settings& settings) {
  const auto& table = fields();
  for (const auto& [key, value] : settings) {
    if (!table.contains(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  for (const auto& [key, value] : settings) {
    if (key == "scenario") table.at(key).set(cfg, key, value);
  }
  for (const auto& [key, value] : settings) {
    if (key != "scenario") table.at(key).set(cfg, key, value);
  }
}

std::string canonical_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, field] : fields()) {
    if (!field.get) continue;
    out += key + '=' + field.get(cfg) + '\n';
  }
  return out;
}

}  // namespace d2dsim
