#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "seld/parallel.hpp"
#include "seld/tensor.hpp"

namespace seld {

enum class WindowKind { kHann };

struct StftConfig {
  double sample_rate = 24000.0;
  std::size_t win_length = 512;
  std::size_t hop_length = 300;
  std::size_t n_fft = 512;
  WindowKind window = WindowKind::kHann;
  bool center_pad = true;  // reflect-pad n_fft/2 samples on both ends

  std::size_t num_bins() const { return n_fft / 2 + 1; }
  double bin_hz() const { return sample_rate / static_cast<double>(n_fft); }
  std::size_t num_frames(std::size_t num_samples) const;
  void validate() const;
};

// M x N channel-major PCM, nominally in [-1, 1].
class MultichannelAudio {
 public:
  MultichannelAudio() = default;
  MultichannelAudio(std::size_t channels, std::size_t length,
                    double sample_rate);
  MultichannelAudio(std::vector<std::vector<float>> channels,
                    double sample_rate);

  std::size_t num_channels() const { return channels_; }
  std::size_t length() const { return length_; }
  double sample_rate() const { return sample_rate_; }

  std::span<float> channel(std::size_t m) {
    return std::span<float>(samples_).subspan(m * length_, length_);
  }
  std::span<const float> channel(std::size_t m) const {
    return std::span<const float>(samples_).subspan(m * length_, length_);
  }
  std::span<const float> samples() const { return samples_; }

  friend bool operator==(const MultichannelAudio&,
                         const MultichannelAudio&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t length_ = 0;
  double sample_rate_ = 0.0;
  std::vector<float> samples_;
};

struct ComplexSpectrogram {
  ComplexTensor data;  // M x T x F, F = n_fft/2 + 1
  StftConfig config;

  std::size_t num_channels() const { return data.dim(0); }
  std::size_t num_frames() const { return data.dim(1); }
  std::size_t num_bins() const { return data.dim(2); }
  double freq_resolution() const { return config.bin_hz(); }
};

// Thin RAII wrapper over FFTW real-to-complex / complex-to-real plans of one
// size. Plans are immutable after construction; the execute calls take
// caller-owned buffers and may run concurrently.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }

  // in: n samples, out: n/2 + 1 bins (unnormalized).
  void forward(std::span<const double> in,
               std::span<std::complex<double>> out) const;
  // in: n/2 + 1 bins (clobbered), out: n samples, scaled by 1/n.
  void inverse(std::span<std::complex<double>> in,
               std::span<double> out) const;

 private:
  struct Plans;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

// Periodic Hann of length win_length, centred inside n_fft points.
std::vector<double> analysis_window(const StftConfig& cfg);

ComplexSpectrogram stft(const MultichannelAudio& audio, const StftConfig& cfg,
                        const ExecPolicy& exec = {});

inline constexpr double kDefaultLogFloor = 1e-10;

// |X|^2 per bin.
RealTensor power(const ComplexSpectrogram& spec, const ExecPolicy& exec = {});

// 10 log10(|X|^2 + floor).
RealTensor log_power(const ComplexSpectrogram& spec,
                     double floor = kDefaultLogFloor,
                     const ExecPolicy& exec = {});

double hz_to_mel(double hz);
double mel_to_hz(double mel);

class MelFilterbank {
 public:
  // Validates non-negativity and that every band has non-empty support.
  MelFilterbank(std::size_t bands, std::size_t bins,
                std::vector<double> weights, double f_min, double f_max);

  std::size_t num_bands() const { return bands_; }
  std::size_t num_bins() const { return bins_; }
  double f_min() const { return f_min_; }
  double f_max() const { return f_max_; }
  double weight(std::size_t band, std::size_t bin) const {
    return weights_[band * bins_ + bin];
  }
  std::span<const double> band(std::size_t k) const {
    return std::span<const double>(weights_).subspan(k * bins_, bins_);
  }
  // Half-open [first, last) range of bins with nonzero weight.
  std::size_t support_begin(std::size_t k) const { return support_[k].first; }
  std::size_t support_end(std::size_t k) const { return support_[k].second; }

 private:
  std::size_t bands_;
  std::size_t bins_;
  std::vector<double> weights_;
  std::vector<std::pair<std::size_t, std::size_t>> support_;
  double f_min_;
  double f_max_;
};

// Triangular filters with edges uniform on the 2595 log10(1 + f/700) scale.
// Each weight is the triangle averaged over the bin's frequency cell
// [f_b - df/2, f_b + df/2], then every row is normalised to unit sum.
MelFilterbank make_mel_filterbank(std::size_t bands, std::size_t n_fft,
                                  double sample_rate, double f_min,
                                  double f_max);

// 10 log10(sum_f fb[k,f] power[m,t,f] + floor).
RealTensor apply_mel(const RealTensor& power, const MelFilterbank& fb,
                     double floor = kDefaultLogFloor,
                     const ExecPolicy& exec = {});

}  // namespace seld
