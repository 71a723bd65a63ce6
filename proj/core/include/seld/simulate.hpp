#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "seld/dsp.hpp"
#include "seld/events.hpp"
#include "seld/geometry.hpp"
#include "seld/linalg.hpp"

namespace seld {

struct WhiteNoise {
  std::uint64_t seed = 0;
};
struct Sine {
  double frequency_hz = 1000.0;
  double phase = 0.0;  // radians
};
// White noise band-limited to [low_hz, high_hz] by spectral masking.
struct BandNoise {
  std::uint64_t seed = 0;
  double low_hz = 0.0;
  double high_hz = 0.0;
};
struct FileRef {
  std::string path;
  std::size_t channel = 0;
};
using SourceSignal = std::variant<WhiteNoise, Sine, BandNoise, FileRef>;

struct SourceSpec {
  double azimuth = 0.0;    // degrees, [-180, 180)
  double elevation = 0.0;  // degrees, [-90, 90]
  SourceSignal signal = WhiteNoise{};
  double onset = 0.0;   // seconds
  double offset = 1.0;  // seconds, exclusive
  int class_id = 0;
  // RMS level for generated signals, linear multiplier for FileRef.
  double gain = 0.1;
};

struct SceneSpec {
  ArrayGeometry geometry = ArrayGeometry::tetrahedral();
  std::vector<SourceSpec> sources;
  std::optional<double> snr_db;  // white Gaussian sensor noise when set
  double duration = 1.0;         // seconds
  double sample_rate = 24000.0;
  double speed_of_sound = kSpeedOfSound;
  std::uint64_t noise_seed = 0;
  std::size_t max_polyphony = 3;
  std::size_t num_classes = kDefaultNumClasses;

  void validate() const;
};

// (cos el cos az, cos el sin az, sin el); azimuth counter-clockwise from +x,
// elevation up from the horizontal plane. Degrees in.
Vec3 unit_direction(double azimuth, double elevation);

// d_1m = (r_1 - r_m) . u for m = 2..M, in metres: the extra path to
// microphone m relative to the reference microphone.
std::vector<double> rdoa(const ArrayGeometry& geom, double azimuth,
                         double elevation);

// Farfield response H_m = exp(-j 2 pi f d_1m / c), H_1 = 1.
std::vector<cdouble> steering_vector(const ArrayGeometry& geom, double freq_hz,
                                     double azimuth, double elevation,
                                     double speed_of_sound = kSpeedOfSound);

inline constexpr std::size_t kFractionalDelayTaps = 64;

// out[n] = s(n - delay) by Blackman-windowed sinc interpolation over 64
// taps, where s(i) = source[i + lead] and is zero outside the buffer. Integer
// delays copy samples exactly.
void fractional_delay(std::span<const double> source, std::size_t lead,
                      double delay, std::span<double> out);

struct Scene {
  MultichannelAudio audio;
  SeldEventGrid events;
};

// Each source reaches microphone m delayed by -(r_m . u) / c relative to
// the array centre; label frames are 100 ms.
Scene synthesize(const SceneSpec& scene);

// Key-value scene description; see README for the schema. Relative FileRef
// paths resolve against base_dir.
SceneSpec parse_scene(const std::string& text, const std::string& base_dir = ".");
SceneSpec load_scene(const std::string& path);

}  // namespace seld
