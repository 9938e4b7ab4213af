#include "fogpipe/feed.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <system_error>

namespace fogpipe {

namespace {

constexpr std::array<const char*, 6> kCoreColumns = {"route_id", "route_number", "vehicle_id",
                                                     "lat",      "lon",          "ts"};

bool parse_double_field(std::string_view text, const char* column, std::optional<double>& out,
                        std::string& err) {
  if (text.empty()) {
    out.reset();
    return true;
  }
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    err = std::string("non-numeric value in column ") + column;
    return false;
  }
  out = v;
  return true;
}

bool parse_int_field(std::string_view text, const char* column, std::optional<int64_t>& out,
                     std::string& err) {
  if (text.empty()) {
    out.reset();
    return true;
  }
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    err = std::string("non-numeric value in column ") + column;
    return false;
  }
  out = v;
  return true;
}

void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  size_t start = 0;
  while (true) {
    size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string format_int(int64_t v) {
  char buf[24];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

void append_extras(std::string& out, const ExtrasList& extras) {
  for (const auto& [key, value] : extras) {
    out += ',';
    out += key;
    out += '=';
    out += value;
  }
}

}  // namespace

const char* to_string(MotionLabel label) {
  return label == MotionLabel::kStop ? "stop" : "move";
}

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::kDuplicate: return "duplicate";
    case RejectReason::kMissingAttribute: return "missing_attribute";
    case RejectReason::kWrongValue: return "wrong_value";
    case RejectReason::kLateDrop: return "late_drop";
  }
  return "unknown";
}

const char* to_string(RejectStage s) {
  return s == RejectStage::kEdge ? "edge" : "fabric";
}

std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

bool parse_tuple(std::string_view line, RawTuple& out, std::string& err) {
  std::vector<std::string_view> fields;
  split_fields(line, fields);
  if (fields.size() < kCoreColumns.size()) {
    err = "expected 6 core columns, got " + format_int(static_cast<int64_t>(fields.size()));
    return false;
  }
  RawTuple t;
  t.route_id = std::string(fields[0]);
  t.route_number = std::string(fields[1]);
  t.vehicle_id = std::string(fields[2]);
  if (!parse_double_field(fields[3], kCoreColumns[3], t.lat, err)) return false;
  if (!parse_double_field(fields[4], kCoreColumns[4], t.lon, err)) return false;
  if (!parse_int_field(fields[5], kCoreColumns[5], t.ts_ms, err)) return false;
  for (size_t i = kCoreColumns.size(); i < fields.size(); ++i) {
    std::string_view f = fields[i];
    size_t eq = f.find('=');
    if (eq == std::string_view::npos) {
      t.extras.emplace_back(std::string(f), std::string());
    } else {
      t.extras.emplace_back(std::string(f.substr(0, eq)), std::string(f.substr(eq + 1)));
    }
  }
  out = std::move(t);
  return true;
}

std::string serialize_tuple(const RawTuple& t) {
  std::string out;
  out += t.route_id;
  out += ',';
  out += t.route_number;
  out += ',';
  out += t.vehicle_id;
  out += ',';
  if (t.lat) out += format_double(*t.lat);
  out += ',';
  if (t.lon) out += format_double(*t.lon);
  out += ',';
  if (t.ts_ms) out += format_int(*t.ts_ms);
  append_extras(out, t.extras);
  return out;
}

std::string serialize_tuple(const CleanTuple& t) { return serialize_tuple(raw_from_clean(t)); }

std::string serialize_tuple(const ContextTuple& t) { return serialize_tuple(raw_from_context(t)); }

RawTuple raw_from_clean(const CleanTuple& t) {
  RawTuple raw;
  raw.route_id = t.route_id;
  raw.route_number = t.route_number;
  raw.vehicle_id = t.vehicle_id;
  raw.lat = t.lat;
  raw.lon = t.lon;
  raw.ts_ms = t.ts_ms;
  raw.extras = t.extras;
  raw.arrival_seq = t.arrival_seq;
  return raw;
}

RawTuple raw_from_context(const ContextTuple& t) {
  RawTuple raw = raw_from_clean(t.tuple);
  raw.extras.emplace_back("label", to_string(t.label));
  if (t.dist_prev_m) raw.extras.emplace_back("dist", format_double(*t.dist_prev_m));
  return raw;
}

bool clean_from_raw(const RawTuple& raw, CleanTuple& out, std::string& err) {
  if (raw.route_id.empty() || raw.vehicle_id.empty()) {
    err = "empty core field";
    return false;
  }
  if (!raw.lat || !raw.lon || !raw.ts_ms) {
    err = "missing numeric core field";
    return false;
  }
  out.route_id = raw.route_id;
  out.route_number = raw.route_number;
  out.vehicle_id = raw.vehicle_id;
  out.lat = *raw.lat;
  out.lon = *raw.lon;
  out.ts_ms = *raw.ts_ms;
  out.extras = raw.extras;
  out.arrival_seq = raw.arrival_seq;
  return true;
}

bool context_from_raw(const RawTuple& raw, ContextTuple& out, std::string& err) {
  CleanTuple clean;
  if (!clean_from_raw(raw, clean, err)) return false;
  ContextTuple ctx;
  bool saw_label = false;
  ExtrasList kept;
  for (const auto& [key, value] : clean.extras) {
    if (key == "label") {
      if (value == "stop") {
        ctx.label = MotionLabel::kStop;
      } else if (value == "move") {
        ctx.label = MotionLabel::kMove;
      } else {
        err = "unknown label value: " + value;
        return false;
      }
      saw_label = true;
    } else if (key == "dist") {
      std::optional<double> d;
      if (!parse_double_field(value, "dist", d, err)) return false;
      ctx.dist_prev_m = d;
    } else {
      kept.push_back({key, value});
    }
  }
  if (!saw_label) {
    err = "missing label extra";
    return false;
  }
  clean.extras = std::move(kept);
  ctx.tuple = std::move(clean);
  out = std::move(ctx);
  return true;
}

bool FeedReader::next(Record& out) {
  std::string line;
  while (std::getline(in_, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.line = line;
    out.error.clear();
    if (parse_tuple(line, out.tuple, out.error)) {
      out.malformed = false;
      out.tuple.arrival_seq = next_seq_++;
    } else {
      out.malformed = true;
      out.tuple = RawTuple{};
    }
    return true;
  }
  return false;
}

std::vector<RawTuple> read_feed_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feed file: " + path);
  std::vector<RawTuple> tuples;
  FeedReader reader(in);
  FeedReader::Record rec;
  while (reader.next(rec)) {
    if (rec.malformed) throw std::runtime_error("malformed line in " + path + ": " + rec.error);
    tuples.push_back(std::move(rec.tuple));
  }
  return tuples;
}

void write_feed_file(const std::string& path, const std::vector<RawTuple>& tuples,
                     const std::string& header_comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  if (!header_comment.empty()) out << "# " << header_comment << "\n";
  for (const auto& t : tuples) out << serialize_tuple(t) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace fogpipe
