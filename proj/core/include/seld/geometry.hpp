#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace seld {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfSound = 343.0;

// Microphone positions in metres, relative to the array centre. Channel 0 is
// the phase reference for every spatial feature.
class ArrayGeometry {
 public:
  explicit ArrayGeometry(std::vector<Vec3> positions);

  // Four capsules on a 42 mm sphere at (azimuth, elevation) = (45, 35),
  // (-45, -35), (135, -35), (-135, 35) degrees.
  static ArrayGeometry tetrahedral(double radius = 0.042);

  std::size_t size() const { return positions_.size(); }
  const std::vector<Vec3>& positions() const { return positions_; }
  const Vec3& position(std::size_t m) const { return positions_[m]; }
  static constexpr std::size_t reference_index() { return 0; }

  double max_distance() const { return d_max_; }
  // c / (2 d_max); infinite for co-located capsules.
  double aliasing_hz(double speed_of_sound = kSpeedOfSound) const;

  // Spatial features need at least two distinct capsules.
  void require_spatial() const;

 private:
  std::vector<Vec3> positions_;
  double d_max_ = 0.0;
};

// Plain-text geometry: one "x y z" line per capsule (metres), '#' comments,
// or the single keyword "tetrahedral".
ArrayGeometry parse_geometry(const std::string& text);
ArrayGeometry load_geometry(const std::string& path);

double dot(const Vec3& a, const Vec3& b);
double distance(const Vec3& a, const Vec3& b);

}  // namespace seld
