#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "seld/dsp.hpp"
#include "seld/geometry.hpp"
#include "seld/linalg.hpp"
#include "seld/parallel.hpp"
#include "seld/tensor.hpp"

namespace seld {

enum class FeatureKind { kMelSpecGcc, kSalsa, kSalsaIpd, kSalsaLite };

// "melspecgcc", "salsa", "salsa-ipd", "salsa-lite"
std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> parse_feature_kind(std::string_view name);

inline bool is_salsa_family(FeatureKind kind) {
  return kind != FeatureKind::kMelSpecGcc;
}

struct FeatureConfig {
  FeatureKind kind = FeatureKind::kSalsaLite;
  StftConfig stft;
  double spec_cutoff_hz = 9000.0;
  double spatial_low_hz = 50.0;
  double spatial_high_hz = 2000.0;
  std::size_t mel_bands = 128;  // also the GCC-PHAT lag count
  double mel_f_min_hz = 50.0;
  bool use_magnitude_test = true;    // Salsa only
  bool use_coherence_test = true;    // Salsa only
  double coherence_threshold = 0.5;
  double magnitude_margin_db = 5.0;
  double noise_floor_percentile = 5.0;
  std::size_t scm_time_radius = 1;
  std::size_t scm_freq_radius = 1;
  double speed_of_sound = kSpeedOfSound;
  double log_floor = kDefaultLogFloor;

  static FeatureConfig defaults(FeatureKind kind);

  // Number of linear-frequency bins kept by SALSA-family features: FFT bins
  // 1 .. floor(spec_cutoff_hz / bin_hz), DC excluded.
  std::size_t num_linear_bins() const;
  // Inclusive FFT-bin range with spatial_low_hz <= f <= spatial_high_hz,
  // clamped to the kept bins. Empty when first > last.
  std::pair<std::size_t, std::size_t> spatial_bins() const;
  bool magnitude_test_active() const {
    return kind == FeatureKind::kSalsa && use_magnitude_test;
  }
  bool coherence_test_active() const {
    return kind == FeatureKind::kSalsa && use_coherence_test;
  }

  void validate() const;
};

struct ChannelRole {
  enum class Kind { kSpectrogram, kGcc, kEpv, kIpd, kNipd };
  Kind kind = Kind::kSpectrogram;
  int first = 0;    // microphone index
  int second = -1;  // second microphone of a GCC pair

  bool is_spatial() const { return kind != Kind::kSpectrogram; }
  // Frequency-indexed channels (everything except GCC lag spectra).
  bool is_frequency_axis() const { return kind != Kind::kGcc; }
  std::string label() const;  // e.g. "spectrogram:0", "gcc:0-1", "nipd:2"
  static ChannelRole parse(std::string_view label);

  friend bool operator==(const ChannelRole&, const ChannelRole&) = default;
};

// Meaning of the last tensor axis for one channel.
struct AxisMeta {
  enum class Kind { kLinearFrequency, kMel, kLag };
  Kind kind = Kind::kLinearFrequency;
  std::size_t size = 0;
  double start = 0.0;  // Hz of index 0, or the first lag in samples
  double step = 0.0;   // Hz per bin, or 1 sample per lag; 0 for mel
  double f_min = 0.0;  // mel range
  double f_max = 0.0;

  friend bool operator==(const AxisMeta&, const AxisMeta&) = default;
};

struct FeatureTensor {
  FeatureKind kind = FeatureKind::kSalsaLite;
  FeatureConfig config;
  RealTensor data;  // C x T x B
  std::vector<ChannelRole> roles;
  std::vector<AxisMeta> axes;  // one per channel

  std::size_t num_channels() const { return data.dim(0); }
  std::size_t num_frames() const { return data.dim(1); }
  std::size_t num_bins() const { return data.dim(2); }
};

// GCC-PHAT for every pair i < j in lexicographic order, at integer lags
// -(K/2 - 1) .. K/2 in increasing order. Positive lag means channel i lags
// channel j.
RealTensor compute_gcc_phat(const ComplexSpectrogram& spec, std::size_t lags,
                            const ExecPolicy& exec = {});

// RDOA estimate -c/(2 pi f) arg(X_0^* X_m) in metres for m = 1..M-1, on the
// kept linear bins; zero outside [spatial_low_hz, spatial_high_hz].
RealTensor compute_nipd(const ComplexSpectrogram& spec, const FeatureConfig& cfg,
                        const ExecPolicy& exec = {});

// NIPD of one multichannel STFT cell in double precision, m = 1..M-1.
std::vector<double> nipd_vector(std::span<const cdouble> x, double freq_hz,
                                double speed_of_sound = kSpeedOfSound);

// -arg(X_0^* X_m) / (2 pi) in cycles; same band handling as compute_nipd.
RealTensor compute_ipd(const ComplexSpectrogram& spec, const FeatureConfig& cfg,
                       const ExecPolicy& exec = {});

// Per-bin noise floor (linear power) for the magnitude test: the given
// percentile over all frames of the channel-mean power.
struct NoiseFloor {
  std::size_t bin_begin = 0;
  std::vector<double> power;

  double at(std::size_t bin) const { return power[bin - bin_begin]; }
};
NoiseFloor estimate_noise_floor(const ComplexSpectrogram& spec,
                                double percentile, std::size_t bin_begin,
                                std::size_t bin_end);

// EPV -c/(2 pi f) arg(U_0^* U_m) from the principal eigenvector of each SCM,
// on the kept linear bins for the field's frames. Zero outside the spatial
// band, outside the field, and at bins rejected by the enabled single-source
// tests. When the magnitude test is on and `floor` is null the floor is
// estimated from the field itself.
RealTensor compute_epv(const ScmField& scms, const FeatureConfig& cfg,
                       const NoiseFloor* floor = nullptr,
                       const ExecPolicy& exec = {});

FeatureTensor build_feature(const MultichannelAudio& audio,
                            const FeatureConfig& cfg, const ArrayGeometry& geom,
                            const ExecPolicy& exec = {});

// Per-channel standardisation statistics. Spatial channels are always
// (0, 1); a spectrogram channel with zero variance gets std 1 and a flag.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> degenerate;
};

class ScalerAccumulator {
 public:
  void add(const FeatureTensor& feature);
  Scaler finish() const;

 private:
  std::vector<ChannelRole> roles_;
  std::array<std::size_t, 3> shape_{};
  std::vector<double> count_;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

Scaler fit_scaler(std::span<const FeatureTensor> features);
void apply_scaler(FeatureTensor& feature, const Scaler& scaler);

}  // namespace seld
