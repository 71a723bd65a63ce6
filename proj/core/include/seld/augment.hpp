#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "seld/dsp.hpp"
#include "seld/events.hpp"
#include "seld/features.hpp"
#include "seld/geometry.hpp"

namespace seld {

// DOA map phi -> s_phi * phi + k * 90, theta -> s_theta * theta, i.e. the
// rotation Rz(k * 90) after diag(1, s_phi, s_theta), with the channel
// permutation that makes the array look identical after it. Output channel
// k carries input channel channel_perm[k].
struct SwapTransform {
  std::vector<std::size_t> channel_perm;
  int azimuth_sign = 1;
  int rotation = 0;  // quarter turns, 0..3
  int elevation_sign = 1;

  static SwapTransform identity(std::size_t channels);
  bool is_identity() const;
  std::pair<double, double> map_doa(double azimuth, double elevation) const;
  Vec3 map_position(const Vec3& r) const;

  friend bool operator==(const SwapTransform&, const SwapTransform&) = default;
};

// a after b.
SwapTransform compose(const SwapTransform& a, const SwapTransform& b);
SwapTransform inverse(const SwapTransform& t);

// All 16 (s_phi, k, s_theta) candidates that map the microphone set onto
// itself within `tol` metres; identity first. Arrays with fewer than two
// microphones get the identity only.
std::vector<SwapTransform> derive_swap_table(const ArrayGeometry& geom,
                                             double tol = 1e-6);

MultichannelAudio apply_swap_audio(const MultichannelAudio& audio,
                                   const SwapTransform& t);
SeldEventGrid apply_swap_labels(const SeldEventGrid& events,
                                const SwapTransform& t);
// Swaps an extracted feature directly: spectrogram channels are permuted,
// phase-difference channels re-referenced to the new first microphone, GCC
// pairs reordered with lag reversal where a pair flips.
FeatureTensor apply_swap_feature(const FeatureTensor& feature,
                                 const SwapTransform& t);

enum class MaskMode { kRectCutout, kCrossSpecAugment };

struct MaskSpec {
  MaskMode mode = MaskMode::kRectCutout;
  std::size_t time_span = 0;  // frames
  std::size_t freq_span = 0;  // bins
  float fill_value = 0.0f;
  std::uint64_t seed = 0;
};

// Spans drawn uniformly from [0, 10%] of each axis.
MaskSpec default_mask_spec(const FeatureTensor& feature, MaskMode mode,
                           std::uint64_t seed);

// Masks every channel. Spans are clipped to the tensor; placement comes from
// mt19937_64(seed).
FeatureTensor apply_mask(const FeatureTensor& feature, const MaskSpec& mask);

inline constexpr int kMaxFreqShift = 10;

// Shifts frequency-axis channels by `shift` bins (positive = upwards),
// replicating the edge bin into vacated positions. GCC channels are copied.
FeatureTensor freq_shift(const FeatureTensor& feature, int shift,
                         int max_shift = kMaxFreqShift);

}  // namespace seld
