#include "fogpipe/config.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "fogpipe/feed.hpp"

namespace fogpipe {

namespace {

double parse_double_or_throw(const std::string& key, const std::string& value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw std::invalid_argument("config key " + key + ": bad number '" + value + "'");
  return v;
}

int64_t parse_int_or_throw(const std::string& key, const std::string& value) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw std::invalid_argument("config key " + key + ": bad integer '" + value + "'");
  return v;
}

}  // namespace

void PipelineConfig::validate() const {
  if (edge_nodes < 1) throw std::invalid_argument("edge_nodes must be >= 1");
  if (cadence_s <= 0.0) throw std::invalid_argument("cadence must be > 0");
  if (gap_factor <= 1.0) throw std::invalid_argument("gap_factor must be > 1");
  if (session_min_ms >= session_max_ms)
    throw std::invalid_argument("session window must satisfy min < max");
  if (lateness_bound_s < 0.0) throw std::invalid_argument("lateness_bound must be >= 0");
  if (stop_threshold_m <= 0.0) throw std::invalid_argument("stop_threshold must be > 0");
  if (station_radius_m <= 0.0) throw std::invalid_argument("station_radius must be > 0");
  if (pagerank_damping <= 0.0 || pagerank_damping >= 1.0)
    throw std::invalid_argument("pagerank_damping must lie in (0, 1)");
  if (pagerank_tol <= 0.0) throw std::invalid_argument("pagerank_tol must be > 0");
  if (pagerank_max_iter < 1) throw std::invalid_argument("pagerank_max_iter must be >= 1");
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (key == "feed") feed_path = value;
  else if (key == "network") network_path = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "edge_nodes") edge_nodes = static_cast<int>(parse_int_or_throw(key, value));
  else if (key == "cadence_s") cadence_s = parse_double_or_throw(key, value);
  else if (key == "gap_factor") gap_factor = parse_double_or_throw(key, value);
  else if (key == "session_min_ms") session_min_ms = parse_int_or_throw(key, value);
  else if (key == "session_max_ms") session_max_ms = parse_int_or_throw(key, value);
  else if (key == "lateness_bound_s") lateness_bound_s = parse_double_or_throw(key, value);
  else if (key == "stop_threshold_m") stop_threshold_m = parse_double_or_throw(key, value);
  else if (key == "station_radius_m") station_radius_m = parse_double_or_throw(key, value);
  else if (key == "pagerank_damping") pagerank_damping = parse_double_or_throw(key, value);
  else if (key == "pagerank_tol") pagerank_tol = parse_double_or_throw(key, value);
  else if (key == "pagerank_max_iter")
    pagerank_max_iter = static_cast<int>(parse_int_or_throw(key, value));
  else if (key == "rng_seed") rng_seed = static_cast<uint64_t>(parse_int_or_throw(key, value));
  else throw std::invalid_argument("unknown config key: " + key);
}

std::map<std::string, std::string> PipelineConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["feed"] = feed_path;
  m["network"] = network_path;
  m["out_dir"] = out_dir;
  m["edge_nodes"] = std::to_string(edge_nodes);
  m["cadence_s"] = format_double(cadence_s);
  m["gap_factor"] = format_double(gap_factor);
  m["session_min_ms"] = std::to_string(session_min_ms);
  m["session_max_ms"] = std::to_string(session_max_ms);
  m["lateness_bound_s"] = format_double(lateness_bound_s);
  m["stop_threshold_m"] = format_double(stop_threshold_m);
  m["station_radius_m"] = format_double(station_radius_m);
  m["pagerank_damping"] = format_double(pagerank_damping);
  m["pagerank_tol"] = format_double(pagerank_tol);
  m["pagerank_max_iter"] = std::to_string(pagerank_max_iter);
  m["rng_seed"] = std::to_string(rng_seed);
  return m;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  PipelineConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

void PipelineConfig::to_file(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  for (const auto& [key, value] : to_map()) out << key << "=" << value << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fogpipe
