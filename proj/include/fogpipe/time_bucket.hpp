#ifndef FOGPIPE_TIME_BUCKET_HPP_
#define FOGPIPE_TIME_BUCKET_HPP_

#include <compare>
#include <cstdint>
#include <string>

namespace fogpipe {

inline constexpr int64_t kMsPerHour = 3600LL * 1000;
inline constexpr int64_t kMsPerDay = 24 * kMsPerHour;

// One hour of UTC civil time; the leaf granularity of the time tree.
struct HourBucket {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;   // 0..23

  auto operator<=>(const HourBucket&) const = default;
};

namespace detail {

// Days-from-civil / civil-from-days, proleptic Gregorian calendar.
inline int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

inline void civil_from_days(int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace detail

inline HourBucket hour_bucket_from_ms(int64_t ts_ms) {
  int64_t days = ts_ms / kMsPerDay;
  int64_t rem = ts_ms % kMsPerDay;
  if (rem < 0) {
    rem += kMsPerDay;
    --days;
  }
  HourBucket b;
  detail::civil_from_days(days, b.year, b.month, b.day);
  b.hour = static_cast<int>(rem / kMsPerHour);
  return b;
}

inline int64_t bucket_start_ms(const HourBucket& b) {
  return detail::days_from_civil(b.year, b.month, b.day) * kMsPerDay + b.hour * kMsPerHour;
}

// First millisecond after the bucket.
inline int64_t bucket_end_ms(const HourBucket& b) { return bucket_start_ms(b) + kMsPerHour; }

inline HourBucket next_hour(const HourBucket& b) { return hour_bucket_from_ms(bucket_end_ms(b)); }

std::string to_string(const HourBucket& b);

// Parses "YYYY-MM-DDTHH"; returns false and sets err on malformed input.
bool parse_hour_bucket(const std::string& text, HourBucket& out, std::string& err);

}  // namespace fogpipe

#endif  // FOGPIPE_TIME_BUCKET_HPP_
