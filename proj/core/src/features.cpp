#include "seld/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "seld/error.hpp"

namespace seld {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kEpvBlockFrames = 64;

double percentile_of(std::vector<double>& values, double pct) {
  // Linear interpolation between closest ranks.
  if (values.empty()) return 0.0;
  const double pos = std::clamp(pct, 0.0, 100.0) / 100.0 *
                     static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo),
                   values.end());
  const double vlo = values[lo];
  if (hi == lo) return vlo;
  const double vhi = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1,
                                       values.end());
  return vlo + (pos - static_cast<double>(lo)) * (vhi - vlo);
}

AxisMeta linear_axis(const FeatureConfig& cfg) {
  const double df = cfg.stft.bin_hz();
  return {AxisMeta::Kind::kLinearFrequency, cfg.num_linear_bins(), df, df, 0.0, 0.0};
}

// Shared body of compute_nipd / compute_ipd: scale(f) * arg(X_0^* X_m).
template <typename Scale>
RealTensor phase_difference(const ComplexSpectrogram& spec,
                            const FeatureConfig& cfg, const ExecPolicy& exec,
                            Scale scale) {
  cfg.validate();
  const std::size_t channels = spec.num_channels();
  require(channels >= 2, ErrorCode::kInvalidArgument,
          "phase difference: need at least two channels");
  const std::size_t bins = cfg.num_linear_bins();
  require(bins < spec.num_bins(), ErrorCode::kShapeMismatch,
          "phase difference: cutoff beyond spectrogram");
  const std::size_t frames = spec.num_frames();
  const auto [lo, hi] = cfg.spatial_bins();
  const double df = spec.freq_resolution();

  RealTensor out(channels - 1, frames, bins, 0.0f);
  parallel_for(frames, exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      for (std::size_t f = lo; f <= hi; ++f) {
        const double s = scale(static_cast<double>(f) * df);
        const cdouble ref = std::conj(spec.data(0, t, f));
        for (std::size_t m = 1; m < channels; ++m) {
          out(m - 1, t, f - 1) =
              static_cast<float>(s * std::arg(ref * spec.data(m, t, f)));
        }
      }
    }
  });
  return out;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMelSpecGcc: return "melspecgcc";
    case FeatureKind::kSalsa: return "salsa";
    case FeatureKind::kSalsaIpd: return "salsa-ipd";
    case FeatureKind::kSalsaLite: return "salsa-lite";
  }
  return "unknown";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view name) {
  for (const auto k : {FeatureKind::kMelSpecGcc, FeatureKind::kSalsa,
                       FeatureKind::kSalsaIpd, FeatureKind::kSalsaLite}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

FeatureConfig FeatureConfig::defaults(FeatureKind kind) {
  FeatureConfig cfg;
  cfg.kind = kind;
  cfg.spatial_high_hz = kind == FeatureKind::kSalsa ? 4000.0 : 2000.0;
  return cfg;
}

std::size_t FeatureConfig::num_linear_bins() const {
  return static_cast<std::size_t>(std::floor(spec_cutoff_hz / stft.bin_hz() + 1e-9));
}

std::pair<std::size_t, std::size_t> FeatureConfig::spatial_bins() const {
  const double df = stft.bin_hz();
  const auto first = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(spatial_low_hz / df - 1e-9)));
  const auto last = std::min(
      num_linear_bins(),
      static_cast<std::size_t>(std::floor(spatial_high_hz / df + 1e-9)));
  return {first, last};
}

void FeatureConfig::validate() const {
  stft.validate();
  const double nyquist = stft.sample_rate / 2.0;
  require(spec_cutoff_hz > 0.0 && spec_cutoff_hz <= nyquist,
          ErrorCode::kInvalidArgument, "config: need 0 < spec_cutoff_hz <= Nyquist");
  require(num_linear_bins() >= 1, ErrorCode::kInvalidArgument,
          "config: cutoff keeps no frequency bins");
  require(spatial_low_hz >= 0.0 && spatial_low_hz < spatial_high_hz,
          ErrorCode::kInvalidArgument, "config: need spatial_low_hz < spatial_high_hz");
  if (is_salsa_family(kind)) {
    require(spatial_high_hz <= spec_cutoff_hz, ErrorCode::kInvalidArgument,
            "config: spatial_high_hz must not exceed spec_cutoff_hz");
  }
  require(mel_bands >= 2 && mel_bands % 2 == 0 && mel_bands <= stft.n_fft,
          ErrorCode::kInvalidArgument, "config: mel_bands must be even and <= n_fft");
  require(mel_f_min_hz >= 0.0 && mel_f_min_hz < spec_cutoff_hz,
          ErrorCode::kInvalidArgument, "config: mel_f_min_hz must be below cutoff");
  require(speed_of_sound > 0.0, ErrorCode::kInvalidArgument,
          "config: speed_of_sound must be positive");
  require(coherence_threshold >= 0.0 && coherence_threshold <= 1.0,
          ErrorCode::kInvalidArgument, "config: coherence_threshold outside [0, 1]");
  require(noise_floor_percentile >= 0.0 && noise_floor_percentile <= 100.0,
          ErrorCode::kInvalidArgument, "config: noise_floor_percentile outside [0, 100]");
  require(std::isfinite(magnitude_margin_db), ErrorCode::kInvalidArgument,
          "config: magnitude_margin_db must be finite");
  require(log_floor > 0.0, ErrorCode::kInvalidArgument, "config: log_floor must be > 0");
}

std::string ChannelRole::label() const {
  switch (kind) {
    case Kind::kSpectrogram: return "spectrogram:" + std::to_string(first);
    case Kind::kGcc:
      return "gcc:" + std::to_string(first) + "-" + std::to_string(second);
    case Kind::kEpv: return "epv:" + std::to_string(first);
    case Kind::kIpd: return "ipd:" + std::to_string(first);
    case Kind::kNipd: return "nipd:" + std::to_string(first);
  }
  return "unknown";
}

ChannelRole ChannelRole::parse(std::string_view label) {
  const auto colon = label.find(':');
  if (colon == std::string_view::npos) {
    fail(ErrorCode::kFormat, "role: missing ':' in '" + std::string(label) + "'");
  }
  const auto name = label.substr(0, colon);
  auto rest = label.substr(colon + 1);
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v < 0) {
      fail(ErrorCode::kFormat, "role: bad index in '" + std::string(label) + "'");
    }
    return v;
  };
  ChannelRole r;
  if (name == "gcc") {
    const auto dash = rest.find('-');
    if (dash == std::string_view::npos) {
      fail(ErrorCode::kFormat, "role: gcc needs a pair in '" + std::string(label) + "'");
    }
    r.kind = Kind::kGcc;
    r.first = parse_int(rest.substr(0, dash));
    r.second = parse_int(rest.substr(dash + 1));
    return r;
  }
  if (name == "spectrogram") r.kind = Kind::kSpectrogram;
  else if (name == "epv") r.kind = Kind::kEpv;
  else if (name == "ipd") r.kind = Kind::kIpd;
  else if (name == "nipd") r.kind = Kind::kNipd;
  else fail(ErrorCode::kFormat, "role: unknown kind in '" + std::string(label) + "'");
  r.first = parse_int(rest);
  return r;
}

RealTensor compute_gcc_phat(const ComplexSpectrogram& spec, std::size_t lags,
                            const ExecPolicy& exec) {
  const std::size_t channels = spec.num_channels();
  require(channels >= 2, ErrorCode::kInvalidArgument,
          "gcc-phat: need at least two channels");
  const std::size_t n_fft = spec.config.n_fft;
  require(lags >= 2 && lags % 2 == 0 && lags <= n_fft, ErrorCode::kInvalidArgument,
          "gcc-phat: lag count must be even and <= n_fft");
  const std::size_t frames = spec.num_frames(), bins = spec.num_bins();
  const std::size_t pairs = channels * (channels - 1) / 2;
  std::vector<std::pair<std::size_t, std::size_t>> pair_list;
  for (std::size_t i = 0; i < channels; ++i) {
    for (std::size_t j = i + 1; j < channels; ++j) pair_list.emplace_back(i, j);
  }

  RealTensor out(pairs, frames, lags);
  const RealFft fft(n_fft);
  const auto half = static_cast<std::ptrdiff_t>(lags / 2);
  constexpr double kGuard = 1e-10;

  parallel_for(pairs * frames, exec, [&](std::size_t begin, std::size_t end) {
    std::vector<cdouble> cross(bins);
    std::vector<double> corr(n_fft);
    for (std::size_t job = begin; job < end; ++job) {
      const std::size_t p = job / frames, t = job % frames;
      const auto [i, j] = pair_list[p];
      for (std::size_t f = 0; f < bins; ++f) {
        const cdouble c = spec.data(i, t, f) * std::conj(spec.data(j, t, f));
        const double mag = std::abs(c);
        cross[f] = mag > kGuard ? c / mag : cdouble{};
      }
      fft.inverse(cross, corr);
      auto dst = out.row(p, t);
      for (std::size_t k = 0; k < lags; ++k) {
        const std::ptrdiff_t tau = static_cast<std::ptrdiff_t>(k) - (half - 1);
        const auto idx = static_cast<std::size_t>(
            (tau + static_cast<std::ptrdiff_t>(n_fft)) % static_cast<std::ptrdiff_t>(n_fft));
        dst[k] = static_cast<float>(corr[idx]);
      }
    }
  });
  return out;
}

RealTensor compute_nipd(const ComplexSpectrogram& spec, const FeatureConfig& cfg,
                        const ExecPolicy& exec) {
  const double c = cfg.speed_of_sound;
  return phase_difference(spec, cfg, exec,
                          [c](double hz) { return -c / (kTwoPi * hz); });
}

std::vector<double> nipd_vector(std::span<const cdouble> x, double freq_hz,
                                double speed_of_sound) {
  require(x.size() >= 2, ErrorCode::kInvalidArgument, "nipd: need at least two channels");
  require(freq_hz > 0.0, ErrorCode::kInvalidArgument, "nipd: frequency must be positive");
  const double s = -speed_of_sound / (kTwoPi * freq_hz);
  std::vector<double> out;
  for (std::size_t m = 1; m < x.size(); ++m) out.push_back(s * std::arg(std::conj(x[0]) * x[m]));
  return out;
}

RealTensor compute_ipd(const ComplexSpectrogram& spec, const FeatureConfig& cfg,
                       const ExecPolicy& exec) {
  return phase_difference(spec, cfg, exec, [](double) { return -1.0 / kTwoPi; });
}

NoiseFloor estimate_noise_floor(const ComplexSpectrogram& spec, double percentile,
                                std::size_t bin_begin, std::size_t bin_end) {
  bin_end = std::min(bin_end, spec.num_bins());
  NoiseFloor floor{bin_begin, {}};
  if (bin_begin >= bin_end) return floor;
  const std::size_t frames = spec.num_frames(), channels = spec.num_channels();
  std::vector<double> column(frames);
  for (std::size_t f = bin_begin; f < bin_end; ++f) {
    for (std::size_t t = 0; t < frames; ++t) {
      double p = 0.0;
      for (std::size_t m = 0; m < channels; ++m) p += std::norm(spec.data(m, t, f));
      column[t] = p / static_cast<double>(channels);
    }
    floor.power.push_back(percentile_of(column, percentile));
  }
  return floor;
}

RealTensor compute_epv(const ScmField& scms, const FeatureConfig& cfg,
                       const NoiseFloor* floor, const ExecPolicy& exec) {
  cfg.validate();
  const std::size_t channels = scms.channels;
  require(channels >= 2, ErrorCode::kInvalidArgument, "epv: need at least two channels");
  const std::size_t bins = cfg.num_linear_bins();
  const double df = cfg.stft.bin_hz();
  auto [lo, hi] = cfg.spatial_bins();
  lo = std::max(lo, scms.bin_begin);
  hi = std::min(hi, scms.bin_begin + scms.num_bins - 1);
  if (scms.num_bins == 0) hi = 0;

  const bool magnitude = cfg.magnitude_test_active();
  const bool coherent = cfg.coherence_test_active();
  const double margin = std::pow(10.0, cfg.magnitude_margin_db / 10.0);

  NoiseFloor own;
  if (magnitude && floor == nullptr && lo <= hi) {
    own.bin_begin = lo;
    std::vector<double> column(scms.num_frames);
    for (std::size_t f = lo; f <= hi; ++f) {
      for (std::size_t t = 0; t < scms.num_frames; ++t) {
        column[t] = scms.power_at(t, f - scms.bin_begin);
      }
      own.power.push_back(percentile_of(column, cfg.noise_floor_percentile));
    }
    floor = &own;
  }

  RealTensor out(channels - 1, scms.num_frames, bins, 0.0f);
  if (lo > hi) return out;
  parallel_for(scms.num_frames, exec, [&](std::size_t begin, std::size_t end) {
    std::array<cdouble, kMaxChannels * kMaxChannels> a{};
    std::array<cdouble, kMaxChannels * kMaxChannels> v{};
    std::array<double, kMaxChannels> values{};
    for (std::size_t t = begin; t < end; ++t) {
      for (std::size_t f = lo; f <= hi; ++f) {
        const std::size_t lf = f - scms.bin_begin;
        if (magnitude && scms.power_at(t, lf) < floor->at(f) * margin) continue;
        const SmallMatrix& r = scms.at(t, lf);
        const double trace = r.trace();
        if (!(trace > 0.0)) continue;
        std::copy(r.data(), r.data() + a.size(), a.begin());
        detail::jacobi_eigen(channels, a.data(), values.data(), v.data());
        std::size_t best = 0;
        for (std::size_t k = 1; k < channels; ++k) {
          if (values[k] > values[best]) best = k;
        }
        if (coherent && values[best] / trace < cfg.coherence_threshold) continue;
        const double scale = -cfg.speed_of_sound / (kTwoPi * static_cast<double>(f) * df);
        const cdouble ref = std::conj(v[best]);  // row 0 of column `best`
        for (std::size_t m = 1; m < channels; ++m) {
          out(m - 1, t, f - 1) = static_cast<float>(
              scale * std::arg(ref * v[m * kMaxChannels + best]));
        }
      }
    }
  });
  return out;
}

FeatureTensor build_feature(const MultichannelAudio& audio, const FeatureConfig& cfg,
                            const ArrayGeometry& geom, const ExecPolicy& exec) {
  cfg.validate();
  geom.require_spatial();
  if (audio.num_channels() != geom.size()) {
    fail(ErrorCode::kShapeMismatch,
         "build_feature: audio has " + std::to_string(audio.num_channels()) +
             " channels, geometry has " + std::to_string(geom.size()));
  }
  require(audio.num_channels() <= kMaxChannels, ErrorCode::kInvalidArgument,
          "build_feature: at most 8 channels supported");

  const ComplexSpectrogram spec = stft(audio, cfg.stft, exec);
  const std::size_t channels = spec.num_channels(), frames = spec.num_frames();

  FeatureTensor feat;
  feat.kind = cfg.kind;
  feat.config = cfg;

  if (cfg.kind == FeatureKind::kMelSpecGcc) {
    const std::size_t k = cfg.mel_bands;
    const auto fb = make_mel_filterbank(k, cfg.stft.n_fft, cfg.stft.sample_rate,
                                        cfg.mel_f_min_hz, cfg.spec_cutoff_hz);
    const RealTensor mel = apply_mel(power(spec, exec), fb, cfg.log_floor, exec);
    const RealTensor gcc = compute_gcc_phat(spec, k, exec);
    const std::size_t pairs = gcc.dim(0);
    feat.data = RealTensor(channels + pairs, frames, k);
    const AxisMeta mel_axis{AxisMeta::Kind::kMel, k, 0.0, 0.0, cfg.mel_f_min_hz,
                            cfg.spec_cutoff_hz};
    const AxisMeta lag_axis{AxisMeta::Kind::kLag, k,
                            -static_cast<double>(k / 2 - 1), 1.0, 0.0, 0.0};
    for (std::size_t m = 0; m < channels; ++m) {
      std::copy(mel.channel(m).begin(), mel.channel(m).end(),
                feat.data.channel(m).begin());
      feat.roles.push_back({ChannelRole::Kind::kSpectrogram, static_cast<int>(m)});
      feat.axes.push_back(mel_axis);
    }
    std::size_t p = 0;
    for (std::size_t i = 0; i < channels; ++i) {
      for (std::size_t j = i + 1; j < channels; ++j, ++p) {
        std::copy(gcc.channel(p).begin(), gcc.channel(p).end(),
                  feat.data.channel(channels + p).begin());
        feat.roles.push_back(
            {ChannelRole::Kind::kGcc, static_cast<int>(i), static_cast<int>(j)});
        feat.axes.push_back(lag_axis);
      }
    }
    return feat;
  }

  const std::size_t bins = cfg.num_linear_bins();
  require(bins < spec.num_bins(), ErrorCode::kInvalidArgument,
          "build_feature: cutoff beyond spectrogram");
  feat.data = RealTensor(2 * channels - 1, frames, bins, 0.0f);
  const AxisMeta axis = linear_axis(cfg);

  parallel_for(channels * frames, exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t job = begin; job < end; ++job) {
      const std::size_t m = job / frames, t = job % frames;
      auto dst = feat.data.row(m, t);
      for (std::size_t f = 1; f <= bins; ++f) {
        dst[f - 1] = static_cast<float>(
            10.0 * std::log10(std::norm(spec.data(m, t, f)) + cfg.log_floor));
      }
    }
  });
  for (std::size_t m = 0; m < channels; ++m) {
    feat.roles.push_back({ChannelRole::Kind::kSpectrogram, static_cast<int>(m)});
    feat.axes.push_back(axis);
  }

  ChannelRole::Kind spatial_kind = ChannelRole::Kind::kNipd;
  if (cfg.kind == FeatureKind::kSalsaLite || cfg.kind == FeatureKind::kSalsaIpd) {
    const RealTensor spatial = cfg.kind == FeatureKind::kSalsaLite
                                   ? compute_nipd(spec, cfg, exec)
                                   : compute_ipd(spec, cfg, exec);
    if (cfg.kind == FeatureKind::kSalsaIpd) spatial_kind = ChannelRole::Kind::kIpd;
    for (std::size_t m = 0; m + 1 < channels; ++m) {
      std::copy(spatial.channel(m).begin(), spatial.channel(m).end(),
                feat.data.channel(channels + m).begin());
    }
  } else {
    spatial_kind = ChannelRole::Kind::kEpv;
    const auto [lo, hi] = cfg.spatial_bins();
    if (lo <= hi) {
      NoiseFloor floor;
      if (cfg.magnitude_test_active()) {
        floor = estimate_noise_floor(spec, cfg.noise_floor_percentile, lo, hi + 1);
      }
      // Blocked over time so the per-bin SCM storage stays bounded.
      for (std::size_t t0 = 0; t0 < frames; t0 += kEpvBlockFrames) {
        const std::size_t t1 = std::min(frames, t0 + kEpvBlockFrames);
        const ScmField field = estimate_scm(spec, cfg.scm_time_radius,
                                            cfg.scm_freq_radius,
                                            {t0, t1, lo, hi + 1}, exec);
        const RealTensor epv = compute_epv(
            field, cfg, cfg.magnitude_test_active() ? &floor : nullptr, exec);
        for (std::size_t m = 0; m + 1 < channels; ++m) {
          for (std::size_t t = t0; t < t1; ++t) {
            const auto src = epv.row(m, t - t0);
            std::copy(src.begin(), src.end(), feat.data.row(channels + m, t).begin());
          }
        }
      }
    }
  }
  for (std::size_t m = 1; m < channels; ++m) {
    feat.roles.push_back({spatial_kind, static_cast<int>(m)});
    feat.axes.push_back(axis);
  }
  return feat;
}

void ScalerAccumulator::add(const FeatureTensor& feature) {
  if (roles_.empty()) {
    require(!feature.roles.empty(), ErrorCode::kInvalidArgument,
            "scaler: feature has no channel roles");
    roles_ = feature.roles;
    shape_ = feature.data.shape();
    count_.assign(roles_.size(), 0.0);
    mean_.assign(roles_.size(), 0.0);
    m2_.assign(roles_.size(), 0.0);
  }
  if (feature.roles != roles_ || feature.data.dim(0) != shape_[0] ||
      feature.data.dim(2) != shape_[2]) {
    fail(ErrorCode::kShapeMismatch, "scaler: inconsistent feature layout in stream");
  }
  for (std::size_t c = 0; c < roles_.size(); ++c) {
    if (roles_[c].is_spatial()) continue;
    const auto x = feature.data.channel(c);
    if (x.empty()) continue;
    double mean = 0.0;
    for (const float v : x) mean += v;
    const auto n = static_cast<double>(x.size());
    mean /= n;
    double m2 = 0.0;
    for (const float v : x) m2 += (v - mean) * (v - mean);
    // Chan et al. pairwise merge of (count, mean, M2).
    const double total = count_[c] + n;
    const double delta = mean - mean_[c];
    mean_[c] += delta * n / total;
    m2_[c] += m2 + delta * delta * count_[c] * n / total;
    count_[c] = total;
  }
}

Scaler ScalerAccumulator::finish() const {
  require(!roles_.empty(), ErrorCode::kInvalidArgument, "scaler: empty feature stream");
  Scaler s;
  for (std::size_t c = 0; c < roles_.size(); ++c) {
    if (roles_[c].is_spatial() || count_[c] == 0.0) {
      s.mean.push_back(0.0);
      s.stddev.push_back(1.0);
      s.degenerate.push_back(false);
      continue;
    }
    const double sd = std::sqrt(m2_[c] / count_[c]);
    const bool flat = !(sd > 1e-12 * std::max(1.0, std::abs(mean_[c])));
    s.mean.push_back(mean_[c]);
    s.stddev.push_back(flat ? 1.0 : sd);
    s.degenerate.push_back(flat);
  }
  return s;
}

Scaler fit_scaler(std::span<const FeatureTensor> features) {
  ScalerAccumulator acc;
  for (const auto& f : features) acc.add(f);
  return acc.finish();
}

void apply_scaler(FeatureTensor& feature, const Scaler& scaler) {
  require(scaler.mean.size() == feature.num_channels(), ErrorCode::kShapeMismatch,
          "scaler: channel count mismatch");
  for (std::size_t c = 0; c < feature.num_channels(); ++c) {
    const double mu = scaler.mean[c], sd = scaler.stddev[c];
    if (mu == 0.0 && sd == 1.0) continue;
    for (float& v : feature.data.channel(c)) {
      v = static_cast<float>((v - mu) / sd);
    }
  }
}

}  // namespace seld
