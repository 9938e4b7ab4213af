#include "fogpipe/time_bucket.hpp"

#include <charconv>
#include <cstdio>

namespace fogpipe {

std::string to_string(const HourBucket& b) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d", b.year, b.month, b.day, b.hour);
  return buf;
}

bool parse_hour_bucket(const std::string& text, HourBucket& out, std::string& err) {
  auto parse_part = [&](size_t pos, size_t len, int lo, int hi, int& v) {
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
    return ec == std::errc() && ptr == text.data() + pos + len && v >= lo && v <= hi;
  };
  HourBucket b;
  if (text.size() != 13 || text[4] != '-' || text[7] != '-' || text[10] != 'T' ||
      !parse_part(0, 4, 0, 9999, b.year) || !parse_part(5, 2, 1, 12, b.month) ||
      !parse_part(8, 2, 1, 31, b.day) || !parse_part(11, 2, 0, 23, b.hour)) {
    err = "expected hour as YYYY-MM-DDTHH, got '" + text + "'";
    return false;
  }
  out = b;
  return true;
}

}  // namespace fogpipe
