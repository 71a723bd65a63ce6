#include "seld/geometry.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "seld/error.hpp"

namespace seld {

double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

ArrayGeometry::ArrayGeometry(std::vector<Vec3> positions)
    : positions_(std::move(positions)) {
  require(!positions_.empty(), ErrorCode::kInvalidArgument,
          "geometry: need at least one microphone");
  for (const auto& p : positions_) {
    for (const double c : p) {
      require(std::isfinite(c), ErrorCode::kInvalidArgument,
              "geometry: non-finite coordinate");
    }
  }
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    for (std::size_t j = i + 1; j < positions_.size(); ++j) {
      d_max_ = std::max(d_max_, distance(positions_[i], positions_[j]));
    }
  }
}

ArrayGeometry ArrayGeometry::tetrahedral(double radius) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double angles[4][2] = {{45, 35}, {-45, -35}, {135, -35}, {-135, 35}};
  std::vector<Vec3> pos;
  for (const auto& a : angles) {
    const double az = a[0] * deg, el = a[1] * deg;
    pos.push_back({radius * std::cos(el) * std::cos(az),
                   radius * std::cos(el) * std::sin(az), radius * std::sin(el)});
  }
  return ArrayGeometry(std::move(pos));
}

double ArrayGeometry::aliasing_hz(double speed_of_sound) const {
  if (d_max_ <= 0.0) return std::numeric_limits<double>::infinity();
  return speed_of_sound / (2.0 * d_max_);
}

void ArrayGeometry::require_spatial() const {
  require(positions_.size() >= 2, ErrorCode::kInvalidArgument,
          "geometry: spatial features need at least two microphones");
  require(d_max_ > 0.0, ErrorCode::kInvalidArgument,
          "geometry: microphones are co-located");
}

ArrayGeometry parse_geometry(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Vec3> pos;
  bool keyword = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "tetrahedral") {
      keyword = true;
      continue;
    }
    Vec3 p{};
    std::istringstream all(line);
    if (!(all >> p[0] >> p[1] >> p[2])) {
      fail(ErrorCode::kFormat,
           "geometry: line " + std::to_string(lineno) + " is not 'x y z'");
    }
    std::string rest;
    if (all >> rest) {
      fail(ErrorCode::kFormat,
           "geometry: trailing text on line " + std::to_string(lineno));
    }
    pos.push_back(p);
  }
  if (keyword) {
    require(pos.empty(), ErrorCode::kFormat,
            "geometry: 'tetrahedral' cannot be mixed with coordinates");
    return ArrayGeometry::tetrahedral();
  }
  require(!pos.empty(), ErrorCode::kFormat, "geometry: no microphones listed");
  return ArrayGeometry(std::move(pos));
}

ArrayGeometry load_geometry(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIo, "geometry: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_geometry(ss.str());
}

}  // namespace seld
