#include "seld/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "seld/error.hpp"

namespace seld {

namespace {

// The FFTW planner is not re-entrant; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Mirror index into [0, n) without repeating the edge sample, iterating the
// reflection when the pad exceeds the signal length.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t r = i % period;
  if (r < 0) r += period;
  if (r >= static_cast<std::ptrdiff_t>(n)) r = period - r;
  return static_cast<std::size_t>(r);
}

double ramp_up_integral(double lo, double c, double a, double b) {
  a = std::clamp(a, lo, c);
  b = std::clamp(b, lo, c);
  if (b <= a || c <= lo) return 0.0;
  return ((b - lo) * (b - lo) - (a - lo) * (a - lo)) / (2.0 * (c - lo));
}

double ramp_down_integral(double c, double hi, double a, double b) {
  a = std::clamp(a, c, hi);
  b = std::clamp(b, c, hi);
  if (b <= a || hi <= c) return 0.0;
  return ((hi - a) * (hi - a) - (hi - b) * (hi - b)) / (2.0 * (hi - c));
}

}  // namespace

std::size_t StftConfig::num_frames(std::size_t num_samples) const {
  if (center_pad) return num_samples / hop_length + 1;
  if (num_samples < n_fft) return 0;
  return (num_samples - n_fft) / hop_length + 1;
}

void StftConfig::validate() const {
  require(sample_rate > 0.0, ErrorCode::kInvalidArgument,
          "stft: sample_rate must be positive");
  require(hop_length >= 1, ErrorCode::kInvalidArgument,
          "stft: hop_length must be >= 1");
  require(win_length >= 1 && win_length <= n_fft,
          ErrorCode::kInvalidArgument, "stft: need 1 <= win_length <= n_fft");
  require(n_fft >= 2 && n_fft % 2 == 0, ErrorCode::kInvalidArgument,
          "stft: n_fft must be even");
}

MultichannelAudio::MultichannelAudio(std::size_t channels, std::size_t length,
                                     double sample_rate)
    : channels_(channels),
      length_(length),
      sample_rate_(sample_rate),
      samples_(channels * length, 0.0f) {
  require(channels >= 1, ErrorCode::kInvalidArgument,
          "audio: need at least one channel");
  require(sample_rate > 0.0, ErrorCode::kInvalidArgument,
          "audio: sample_rate must be positive");
}

MultichannelAudio::MultichannelAudio(std::vector<std::vector<float>> channels,
                                     double sample_rate)
    : channels_(channels.size()),
      length_(channels.empty() ? 0 : channels.front().size()),
      sample_rate_(sample_rate) {
  require(channels_ >= 1, ErrorCode::kInvalidArgument,
          "audio: need at least one channel");
  require(sample_rate > 0.0, ErrorCode::kInvalidArgument,
          "audio: sample_rate must be positive");
  samples_.reserve(channels_ * length_);
  for (const auto& ch : channels) {
    require(ch.size() == length_, ErrorCode::kShapeMismatch,
            "audio: channels must have equal length");
    samples_.insert(samples_.end(), ch.begin(), ch.end());
  }
}

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RealFft::RealFft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  require(n >= 2, ErrorCode::kInvalidArgument, "fft: size must be >= 2");
  const int ni = static_cast<int>(n);
  std::lock_guard lock(planner_mutex());
  double* real = fftw_alloc_real(n);
  fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
  // FFTW_ESTIMATE keeps the chosen algorithm (and so every output bit)
  // independent of timing measurements.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->forward = fftw_plan_dft_r2c_1d(ni, real, cplx, flags);
  plans_->inverse =
      fftw_plan_dft_c2r_1d(ni, cplx, real, flags | FFTW_DESTROY_INPUT);
  fftw_free(real);
  fftw_free(cplx);
  if (!plans_->forward || !plans_->inverse) {
    fail(ErrorCode::kInvalidArgument, "fft: planner failed");
  }
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->inverse) fftw_destroy_plan(plans_->inverse);
}

void RealFft::forward(std::span<const double> in,
                      std::span<std::complex<double>> out) const {
  assert(in.size() == n_ && out.size() == n_ / 2 + 1);
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<std::complex<double>> in,
                      std::span<double> out) const {
  assert(in.size() == n_ / 2 + 1 && out.size() == n_);
  fftw_execute_dft_c2r(plans_->inverse,
                       reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : out) v *= scale;
}

std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.n_fft, 0.0);
  const std::size_t offset = (cfg.n_fft - cfg.win_length) / 2;
  const double n = static_cast<double>(cfg.win_length);
  for (std::size_t i = 0; i < cfg.win_length; ++i) {
    w[offset + i] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
  }
  return w;
}

ComplexSpectrogram stft(const MultichannelAudio& audio, const StftConfig& cfg,
                        const ExecPolicy& exec) {
  cfg.validate();
  require(audio.length() > 0, ErrorCode::kEmptySignal, "stft: empty signal");
  if (audio.sample_rate() != cfg.sample_rate) {
    fail(ErrorCode::kSampleRateMismatch,
         "stft: audio is " + std::to_string(audio.sample_rate()) +
             " Hz but config expects " + std::to_string(cfg.sample_rate));
  }
  const std::size_t n = audio.length();
  const std::size_t frames = cfg.num_frames(n);
  require(frames > 0, ErrorCode::kEmptySignal,
          "stft: signal shorter than one frame without centre padding");
  const std::size_t channels = audio.num_channels();
  const std::size_t bins = cfg.num_bins();
  const auto pad = static_cast<std::ptrdiff_t>(cfg.center_pad ? cfg.n_fft / 2 : 0);

  ComplexSpectrogram spec{ComplexTensor(channels, frames, bins), cfg};
  const RealFft fft(cfg.n_fft);
  const std::vector<double> window = analysis_window(cfg);

  parallel_for(channels * frames, exec, [&](std::size_t begin, std::size_t end) {
    std::vector<double> frame(cfg.n_fft);
    for (std::size_t job = begin; job < end; ++job) {
      const std::size_t m = job / frames;
      const std::size_t t = job % frames;
      const auto x = audio.channel(m);
      const auto start =
          static_cast<std::ptrdiff_t>(t * cfg.hop_length) - pad;
      const bool interior =
          start >= 0 &&
          start + static_cast<std::ptrdiff_t>(cfg.n_fft) <=
              static_cast<std::ptrdiff_t>(n);
      for (std::size_t i = 0; i < cfg.n_fft; ++i) {
        const auto pos = start + static_cast<std::ptrdiff_t>(i);
        const std::size_t src =
            interior ? static_cast<std::size_t>(pos) : reflect_index(pos, n);
        frame[i] = window[i] * static_cast<double>(x[src]);
      }
      fft.forward(frame, spec.data.row(m, t));
    }
  });
  return spec;
}

RealTensor power(const ComplexSpectrogram& spec, const ExecPolicy& exec) {
  const auto& s = spec.data.shape();
  RealTensor out(s[0], s[1], s[2]);
  const auto in = spec.data.data();
  auto dst = out.data();
  parallel_for(in.size(), exec, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) dst[i] = static_cast<float>(std::norm(in[i]));
  });
  return out;
}

RealTensor log_power(const ComplexSpectrogram& spec, double floor,
                     const ExecPolicy& exec) {
  const auto& s = spec.data.shape();
  RealTensor out(s[0], s[1], s[2]);
  const auto in = spec.data.data();
  auto dst = out.data();
  parallel_for(in.size(), exec, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      dst[i] = static_cast<float>(10.0 * std::log10(std::norm(in[i]) + floor));
    }
  });
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank(std::size_t bands, std::size_t bins,
                             std::vector<double> weights, double f_min,
                             double f_max)
    : bands_(bands),
      bins_(bins),
      weights_(std::move(weights)),
      support_(bands),
      f_min_(f_min),
      f_max_(f_max) {
  require(bands >= 1 && bins >= 1, ErrorCode::kInvalidArgument,
          "mel: empty filterbank");
  require(weights_.size() == bands * bins, ErrorCode::kShapeMismatch,
          "mel: weight matrix size does not match bands x bins");
  for (std::size_t k = 0; k < bands; ++k) {
    std::size_t first = bins, last = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double w = weights_[k * bins + b];
      if (!(w >= 0.0) || !std::isfinite(w)) {
        fail(ErrorCode::kInvalidArgument, "mel: weights must be finite and >= 0");
      }
      if (w > 0.0) {
        first = std::min(first, b);
        last = b + 1;
      }
    }
    if (first >= last) {
      fail(ErrorCode::kInvalidArgument,
           "mel: band " + std::to_string(k) + " has empty support");
    }
    support_[k] = {first, last};
  }
}

MelFilterbank make_mel_filterbank(std::size_t bands, std::size_t n_fft,
                                  double sample_rate, double f_min,
                                  double f_max) {
  require(bands >= 1, ErrorCode::kInvalidArgument, "mel: need >= 1 band");
  require(n_fft >= 2 && sample_rate > 0.0, ErrorCode::kInvalidArgument,
          "mel: invalid n_fft or sample rate");
  require(0.0 <= f_min && f_min < f_max && f_max <= sample_rate / 2.0,
          ErrorCode::kInvalidArgument, "mel: need 0 <= f_min < f_max <= sr/2");

  const std::size_t bins = n_fft / 2 + 1;
  const double df = sample_rate / static_cast<double>(n_fft);

  std::size_t bins_in_range = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double f = static_cast<double>(b) * df;
    if (f >= f_min && f <= f_max) ++bins_in_range;
  }
  if (bands > bins_in_range) {
    fail(ErrorCode::kInvalidArgument,
         "mel: " + std::to_string(bands) + " bands exceed the " +
             std::to_string(bins_in_range) + " linear bins in range");
  }

  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(bands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(bands + 1));
  }
  edges.front() = f_min;
  edges.back() = f_max;

  std::vector<double> weights(bands * bins, 0.0);
  for (std::size_t k = 0; k < bands; ++k) {
    const double lo = edges[k], c = edges[k + 1], hi = edges[k + 2];
    double total = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      const double fc = static_cast<double>(b) * df;
      const double a = fc - 0.5 * df, e = fc + 0.5 * df;
      const double w = (ramp_up_integral(lo, c, a, e) +
                        ramp_down_integral(c, hi, a, e)) /
                       df;
      weights[k * bins + b] = w;
      total += w;
    }
    if (total > 0.0) {
      for (std::size_t b = 0; b < bins; ++b) weights[k * bins + b] /= total;
    }
  }
  return MelFilterbank(bands, bins, std::move(weights), f_min, f_max);
}

RealTensor apply_mel(const RealTensor& power, const MelFilterbank& fb,
                     double floor, const ExecPolicy& exec) {
  if (power.dim(2) != fb.num_bins()) {
    fail(ErrorCode::kShapeMismatch,
         "mel: spectrum has " + std::to_string(power.dim(2)) +
             " bins, filterbank expects " + std::to_string(fb.num_bins()));
  }
  const std::size_t channels = power.dim(0), frames = power.dim(1);
  const std::size_t bands = fb.num_bands();
  RealTensor out(channels, frames, bands);
  parallel_for(channels * frames, exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t job = begin; job < end; ++job) {
      const std::size_t m = job / frames, t = job % frames;
      const auto p = power.row(m, t);
      auto dst = out.row(m, t);
      for (std::size_t k = 0; k < bands; ++k) {
        const auto w = fb.band(k);
        double acc = 0.0;
        for (std::size_t b = fb.support_begin(k); b < fb.support_end(k); ++b) {
          acc += w[b] * static_cast<double>(p[b]);
        }
        dst[k] = static_cast<float>(10.0 * std::log10(acc + floor));
      }
    }
  });
  return out;
}

}  // namespace seld
