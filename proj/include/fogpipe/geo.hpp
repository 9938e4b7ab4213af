#ifndef FOGPIPE_GEO_HPP_
#define FOGPIPE_GEO_HPP_

#include <cmath>

namespace fogpipe {

inline constexpr double kMetersPerDegree = 111320.0;
inline constexpr double kPi = 3.14159265358979323846;

struct BoundingBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;
};

// Planar distance in meters between two WGS84 points using a local
// equirectangular projection. Good to well under 0.5% at city scale,
// which is all the stop/move threshold needs.
inline double geo_distance_m(double lat1, double lon1, double lat2, double lon2) {
  double mean_lat_rad = 0.5 * (lat1 + lat2) * kPi / 180.0;
  double dx = (lon2 - lon1) * std::cos(mean_lat_rad) * kMetersPerDegree;
  double dy = (lat2 - lat1) * kMetersPerDegree;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace fogpipe

#endif  // FOGPIPE_GEO_HPP_
