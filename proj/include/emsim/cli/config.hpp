#pragma once

#include "emsim/errors.hpp"
#include "emsim/network/network.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>

namespace emsim::cli {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

/// Flat `key = value` lines. Blank lines and lines starting with '#' are
/// skipped. Later keys override earlier ones.
inline KeyValues parse_key_values(std::string_view text, std::string_view origin = "config") {
  KeyValues out;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(origin) + ":" + std::to_string(number) + ": expected key=value, got '" + t + "'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(std::string(origin) + ":" + std::to_string(number) + ": empty key");
    out[std::move(key)] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

inline KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str(), path);
}

enum class Scenario { GhsMst, Coloring, WritersReader, Factorial, Fig1Delay };

inline Scenario parse_scenario(const std::string& s) {
  if (s == "ghs-mst") return Scenario::GhsMst;
  if (s == "coloring") return Scenario::Coloring;
  if (s == "writers-reader") return Scenario::WritersReader;
  if (s == "factorial") return Scenario::Factorial;
  if (s == "fig1-delay") return Scenario::Fig1Delay;
  throw ConfigError("unknown scenario '" + s + "' (ghs-mst, coloring, writers-reader, factorial, fig1-delay)");
}

inline std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::GhsMst: return "ghs-mst";
    case Scenario::Coloring: return "coloring";
    case Scenario::WritersReader: return "writers-reader";
    case Scenario::Factorial: return "factorial";
    case Scenario::Fig1Delay: return "fig1-delay";
  }
  return "?";
}

/// Everything that determines a run. Two equal configs replay identically.
struct ScenarioConfig {
  Scenario scenario = Scenario::GhsMst;
  bool grid = false;
  std::int64_t grid_width = 0;
  std::int64_t grid_height = 0;
  std::optional<std::size_t> nodes;
  std::optional<std::size_t> edges;
  std::size_t writers = 3;
  std::size_t payload = 3;
  std::int64_t n = 10;
  std::uint64_t seed = 0;
  std::optional<Time> canary;
  CourierSettings courier_defaults;
  std::map<CourierId, CourierOverride> courier_overrides;
  std::optional<std::string> log_out;
  std::optional<std::string> report_out;

  /// Topology for `process_count` processes.
  TopologySpec topology(std::size_t process_count) const {
    TopologySpec t = grid ? TopologySpec::grid(grid_width, grid_height, courier_defaults)
                          : TopologySpec::all_to_all(std::max<std::size_t>(process_count, 1), courier_defaults);
    t.overrides = courier_overrides;
    return t;
  }
};

namespace detail {

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value for " + key + ": '" + value + "'");
  return out;
}

inline Time parse_time(const std::string& key, const std::string& value) {
  try {
    return Time::parse(value);
  } catch (const std::exception&) {
    throw ConfigError("bad time for " + key + ": '" + value + "'");
  }
}

inline std::pair<std::int64_t, std::int64_t> parse_grid(const std::string& value) {
  static const std::regex shape(R"((\d+)[xX](\d+))");
  std::smatch m;
  if (!std::regex_match(value, m, shape)) throw ConfigError("grid must look like WxH, got '" + value + "'");
  const auto w = parse_number<std::int64_t>("grid", m[1].str());
  const auto h = parse_number<std::int64_t>("grid", m[2].str());
  if (w <= 0 || h <= 0) throw ConfigError("grid dimensions must be positive");
  return {w, h};
}

/// "3" -> courier #3, "2,1" -> grid courier (2,1).
inline CourierId parse_courier_id(const std::string& key, const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) return CourierId{parse_number<std::uint64_t>(key, trim(s))};
  return CourierId{GridCoord{parse_number<std::int64_t>(key, trim(s.substr(0, comma))),
                             parse_number<std::int64_t>(key, trim(s.substr(comma + 1)))}};
}

}  // namespace detail

inline ScenarioConfig config_from(const KeyValues& kv) {
  ScenarioConfig c;
  static const std::regex per_courier(R"(courier\[([^\]]+)\]\.(rate|bandwidth))");
  std::optional<std::string> topology;
  std::optional<std::string> grid;
  for (const auto& [key, value] : kv) {
    std::smatch m;
    if (key == "scenario") c.scenario = parse_scenario(value);
    else if (key == "topology") topology = value;
    else if (key == "grid") grid = value;
    else if (key == "nodes") c.nodes = detail::parse_number<std::size_t>(key, value);
    else if (key == "edges") c.edges = detail::parse_number<std::size_t>(key, value);
    else if (key == "writers") c.writers = detail::parse_number<std::size_t>(key, value);
    else if (key == "payload") c.payload = detail::parse_number<std::size_t>(key, value);
    else if (key == "n") c.n = detail::parse_number<std::int64_t>(key, value);
    else if (key == "seed") c.seed = detail::parse_number<std::uint64_t>(key, value);
    else if (key == "canary") c.canary = detail::parse_time(key, value);
    else if (key == "log-out") c.log_out = value;
    else if (key == "report-out") c.report_out = value;
    else if (key == "courier.rate") c.courier_defaults.rate = detail::parse_time(key, value);
    else if (key == "courier.bandwidth") c.courier_defaults.bandwidth = detail::parse_number<std::size_t>(key, value);
    else if (std::regex_match(key, m, per_courier)) {
      auto& o = c.courier_overrides[detail::parse_courier_id(key, m[1].str())];
      if (m[2] == "rate")
        o.rate = detail::parse_time(key, value);
      else
        o.bandwidth = detail::parse_number<std::size_t>(key, value);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  if (topology && *topology != "all-to-all" && *topology != "grid")
    throw ConfigError("topology must be all-to-all or grid, got '" + *topology + "'");
  c.grid = (topology && *topology == "grid") || (!topology && grid);
  if (c.grid) {
    if (!grid) throw ConfigError("grid topology needs grid=WxH");
    std::tie(c.grid_width, c.grid_height) = detail::parse_grid(*grid);
  }
  if (c.courier_defaults.rate <= Time(0)) throw ConfigError("courier.rate must be positive");
  for (const auto& [id, o] : c.courier_overrides) {
    if (o.rate && *o.rate <= Time(0)) throw ConfigError("courier rate must be positive for " + emsim::to_string(id));
    if (c.grid != std::holds_alternative<GridCoord>(id))
      throw ConfigError("courier override " + emsim::to_string(id) + " does not fit the topology");
  }
  if (c.canary && *c.canary < Time(0)) throw ConfigError("canary must not be negative");
  bool zero_bandwidth = c.courier_defaults.bandwidth == std::size_t{0};
  for (const auto& [id, o] : c.courier_overrides) zero_bandwidth |= o.bandwidth == std::size_t{0};
  if (zero_bandwidth) throw ConfigError("courier bandwidth must be at least 1");
  return c;
}

}  // namespace emsim::cli
