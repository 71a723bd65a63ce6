#pragma once

#include <cstddef>
#include <vector>

namespace seld {

struct SeldEvent {
  int class_id = 0;
  int track_id = 0;
  double azimuth = 0.0;    // degrees, [-180, 180)
  double elevation = 0.0;  // degrees, [-90, 90]

  friend bool operator==(const SeldEvent&, const SeldEvent&) = default;
};

inline constexpr double kLabelFrameSeconds = 0.1;
inline constexpr std::size_t kDefaultNumClasses = 12;

// Frame-resolution (100 ms) annotation grid.
struct SeldEventGrid {
  std::size_t num_classes = kDefaultNumClasses;
  std::vector<std::vector<SeldEvent>> frames;

  std::size_t num_frames() const { return frames.size(); }
  std::size_t num_events() const;
  // Throws kOutOfRange on bad class ids or angles.
  void validate() const;

  friend bool operator==(const SeldEventGrid&, const SeldEventGrid&) = default;
};

// Wraps degrees into [-180, 180).
double wrap_azimuth(double degrees);

}  // namespace seld
