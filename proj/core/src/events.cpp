#include "seld/events.hpp"

#include <cmath>
#include <string>

#include "seld/error.hpp"

namespace seld {

std::size_t SeldEventGrid::num_events() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.size();
  return n;
}

void SeldEventGrid::validate() const {
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (const auto& e : frames[t]) {
      if (e.class_id < 0 || static_cast<std::size_t>(e.class_id) >= num_classes) {
        fail(ErrorCode::kOutOfRange,
             "events: class " + std::to_string(e.class_id) + " at frame " +
                 std::to_string(t) + " outside vocabulary");
      }
      if (!(e.azimuth >= -180.0 && e.azimuth < 180.0)) {
        fail(ErrorCode::kOutOfRange,
             "events: azimuth " + std::to_string(e.azimuth) + " at frame " +
                 std::to_string(t) + " outside [-180, 180)");
      }
      if (!(e.elevation >= -90.0 && e.elevation <= 90.0)) {
        fail(ErrorCode::kOutOfRange,
             "events: elevation " + std::to_string(e.elevation) + " at frame " +
                 std::to_string(t) + " outside [-90, 90]");
      }
    }
  }
}

double wrap_azimuth(double degrees) {
  double w = std::fmod(degrees + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  w -= 180.0;
  // fmod can land exactly on +180 after the shift for tiny negative inputs.
  if (w >= 180.0) w -= 360.0;
  return w;
}

}  // namespace seld
