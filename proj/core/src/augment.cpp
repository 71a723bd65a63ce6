#include "seld/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "seld/error.hpp"

namespace seld {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int mod4(int x) { return ((x % 4) + 4) % 4; }

double wrap_phase(double x) {
  x = std::remainder(x, kTwoPi);
  return x <= -std::numbers::pi ? x + kTwoPi : x;
}

}  // namespace

SwapTransform SwapTransform::identity(std::size_t channels) {
  SwapTransform t;
  t.channel_perm.resize(channels);
  for (std::size_t m = 0; m < channels; ++m) t.channel_perm[m] = m;
  return t;
}

bool SwapTransform::is_identity() const {
  if (azimuth_sign != 1 || rotation != 0 || elevation_sign != 1) return false;
  for (std::size_t m = 0; m < channel_perm.size(); ++m) {
    if (channel_perm[m] != m) return false;
  }
  return true;
}

std::pair<double, double> SwapTransform::map_doa(double azimuth, double elevation) const {
  return {wrap_azimuth(azimuth_sign * azimuth + 90.0 * rotation),
          elevation_sign * elevation};
}

Vec3 SwapTransform::map_position(const Vec3& r) const {
  const double x = r[0], y = azimuth_sign * r[1], z = elevation_sign * r[2];
  // Exact quarter turns about z.
  switch (mod4(rotation)) {
    case 1: return {-y, x, z};
    case 2: return {-x, -y, z};
    case 3: return {y, -x, z};
    default: return {x, y, z};
  }
}

SwapTransform compose(const SwapTransform& a, const SwapTransform& b) {
  require(a.channel_perm.size() == b.channel_perm.size(), ErrorCode::kShapeMismatch,
          "compose: transforms act on different channel counts");
  SwapTransform t;
  t.azimuth_sign = a.azimuth_sign * b.azimuth_sign;
  t.rotation = mod4(a.azimuth_sign * b.rotation + a.rotation);
  t.elevation_sign = a.elevation_sign * b.elevation_sign;
  t.channel_perm.resize(a.channel_perm.size());
  for (std::size_t k = 0; k < t.channel_perm.size(); ++k) {
    t.channel_perm[k] = b.channel_perm[a.channel_perm[k]];
  }
  return t;
}

SwapTransform inverse(const SwapTransform& t) {
  SwapTransform inv;
  inv.azimuth_sign = t.azimuth_sign;
  inv.rotation = mod4(-t.azimuth_sign * t.rotation);
  inv.elevation_sign = t.elevation_sign;
  inv.channel_perm.resize(t.channel_perm.size());
  for (std::size_t k = 0; k < t.channel_perm.size(); ++k) inv.channel_perm[t.channel_perm[k]] = k;
  return inv;
}

std::vector<SwapTransform> derive_swap_table(const ArrayGeometry& geom, double tol) {
  require(tol >= 0.0, ErrorCode::kInvalidArgument, "derive_swap_table: negative tolerance");
  const std::size_t n = geom.size();
  std::vector<SwapTransform> table{SwapTransform::identity(n)};
  if (n < 2) return table;
  for (const int s_theta : {1, -1}) {
    for (const int s_phi : {1, -1}) {
      for (int k = 0; k < 4; ++k) {
        SwapTransform t;
        t.azimuth_sign = s_phi;
        t.rotation = k;
        t.elevation_sign = s_theta;
        if (s_phi == 1 && k == 0 && s_theta == 1) continue;
        // New channel k is old channel p with T r_p = r_k.
        t.channel_perm.assign(n, n);
        std::vector<bool> used(n, false);
        bool ok = true;
        for (std::size_t p = 0; p < n && ok; ++p) {
          const Vec3 moved = t.map_position(geom.position(p));
          std::size_t hit = n;
          for (std::size_t q = 0; q < n; ++q) {
            if (distance(moved, geom.position(q)) <= tol) {
              if (hit != n || used[q]) {
                ok = false;
                break;
              }
              hit = q;
            }
          }
          if (!ok || hit == n) {
            ok = false;
            break;
          }
          used[hit] = true;
          t.channel_perm[hit] = p;
        }
        if (ok) table.push_back(std::move(t));
      }
    }
  }
  return table;
}

MultichannelAudio apply_swap_audio(const MultichannelAudio& audio, const SwapTransform& t) {
  require(t.channel_perm.size() == audio.num_channels(), ErrorCode::kShapeMismatch,
          "apply_swap_audio: permutation arity differs from channel count");
  MultichannelAudio out(audio.num_channels(), audio.length(), audio.sample_rate());
  for (std::size_t k = 0; k < audio.num_channels(); ++k) {
    const auto src = audio.channel(t.channel_perm[k]);
    std::copy(src.begin(), src.end(), out.channel(k).begin());
  }
  return out;
}

SeldEventGrid apply_swap_labels(const SeldEventGrid& events, const SwapTransform& t) {
  SeldEventGrid out = events;
  for (auto& frame : out.frames) {
    for (auto& e : frame) {
      std::tie(e.azimuth, e.elevation) = t.map_doa(e.azimuth, e.elevation);
    }
  }
  return out;
}

FeatureTensor apply_swap_feature(const FeatureTensor& feature, const SwapTransform& t) {
  const std::size_t channels = feature.num_channels();
  const std::size_t frames = feature.num_frames(), bins = feature.num_bins();
  std::map<std::pair<int, int>, std::size_t> spectra, pairs, spatial;
  ChannelRole::Kind spatial_kind = ChannelRole::Kind::kNipd;
  std::size_t mics = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    const auto& r = feature.roles[c];
    switch (r.kind) {
      case ChannelRole::Kind::kSpectrogram:
        spectra[{r.first, 0}] = c;
        mics = std::max<std::size_t>(mics, static_cast<std::size_t>(r.first) + 1);
        break;
      case ChannelRole::Kind::kGcc:
        pairs[{r.first, r.second}] = c;
        break;
      default:
        spatial_kind = r.kind;
        spatial[{r.first, 0}] = c;
        break;
    }
  }
  require(t.channel_perm.size() == mics, ErrorCode::kShapeMismatch,
          "apply_swap_feature: permutation arity differs from microphone count");
  const auto& perm = t.channel_perm;
  const auto m = [&](std::size_t k) { return static_cast<int>(perm[k]); };

  FeatureTensor out = feature;
  for (std::size_t k = 0; k < mics; ++k) {
    const auto dst = out.data.channel(spectra.at({static_cast<int>(k), 0}));
    const auto src = feature.data.channel(spectra.at({m(k), 0}));
    std::copy(src.begin(), src.end(), dst.begin());
  }

  if (!spatial.empty()) {
    // Phase of the pair (0, p) at bin b; zero for the reference itself.
    const AxisMeta& axis = feature.axes[spatial.begin()->second];
    const double c = feature.config.speed_of_sound;
    auto to_phase = [&](double v, double f) {
      return spatial_kind == ChannelRole::Kind::kIpd ? -kTwoPi * v : -kTwoPi * f / c * v;
    };
    auto from_phase = [&](double ph, double f) {
      return spatial_kind == ChannelRole::Kind::kIpd ? -ph / kTwoPi : -c * ph / (kTwoPi * f);
    };
    const auto value = [&](int p, std::size_t tt, std::size_t b) -> double {
      return p == 0 ? 0.0 : feature.data(spatial.at({p, 0}), tt, b);
    };
    for (std::size_t k = 1; k < mics; ++k) {
      const std::size_t dst = spatial.at({static_cast<int>(k), 0});
      for (std::size_t tt = 0; tt < frames; ++tt) {
        for (std::size_t b = 0; b < bins; ++b) {
          const double f = axis.start + axis.step * static_cast<double>(b);
          const double a = value(m(k), tt, b), r = value(m(0), tt, b);
          double v = 0.0;
          if (f > 0.0 && (a != 0.0 || r != 0.0)) {
            v = from_phase(wrap_phase(to_phase(a, f) - to_phase(r, f)), f);
          }
          out.data(dst, tt, b) = static_cast<float>(v);
        }
      }
    }
  }

  for (const auto& [key, dst] : pairs) {
    const int i = m(static_cast<std::size_t>(key.first));
    const int j = m(static_cast<std::size_t>(key.second));
    const std::size_t src = pairs.at({std::min(i, j), std::max(i, j)});
    for (std::size_t tt = 0; tt < frames; ++tt) {
      const auto in = feature.data.row(src, tt);
      auto o = out.data.row(dst, tt);
      if (i < j) {
        std::copy(in.begin(), in.end(), o.begin());
      } else {
        // Lag l maps to lag -l; the most positive lag has no mirror.
        for (std::size_t l = 0; l < bins; ++l) {
          o[l] = in[l + 2 <= bins ? bins - 2 - l : 0];
        }
      }
    }
  }
  return out;
}

MaskSpec default_mask_spec(const FeatureTensor& feature, MaskMode mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto draw = [&](std::size_t n) {
    const auto hi = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(n)));
    return std::uniform_int_distribution<std::size_t>(0, hi)(rng);
  };
  MaskSpec spec;
  spec.mode = mode;
  spec.time_span = draw(feature.num_frames());
  spec.freq_span = draw(feature.num_bins());
  spec.seed = rng();
  return spec;
}

FeatureTensor apply_mask(const FeatureTensor& feature, const MaskSpec& mask) {
  require(feature.data.size() > 0, ErrorCode::kEmptySignal, "apply_mask: empty tensor");
  FeatureTensor out = feature;
  const std::size_t frames = feature.num_frames(), bins = feature.num_bins();
  const std::size_t ts = std::min(mask.time_span, frames);
  const std::size_t fs = std::min(mask.freq_span, bins);
  std::mt19937_64 rng(mask.seed);
  const std::size_t t0 = std::uniform_int_distribution<std::size_t>(0, frames - ts)(rng);
  const std::size_t f0 = std::uniform_int_distribution<std::size_t>(0, bins - fs)(rng);
  for (std::size_t c = 0; c < feature.num_channels(); ++c) {
    for (std::size_t t = 0; t < frames; ++t) {
      const bool in_t = t >= t0 && t < t0 + ts;
      auto row = out.data.row(c, t);
      for (std::size_t b = 0; b < bins; ++b) {
        const bool in_f = b >= f0 && b < f0 + fs;
        const bool hit = mask.mode == MaskMode::kRectCutout ? (in_t && in_f) : (in_t || in_f);
        if (hit) row[b] = mask.fill_value;
      }
    }
  }
  return out;
}

FeatureTensor freq_shift(const FeatureTensor& feature, int shift, int max_shift) {
  if (std::abs(shift) > max_shift) {
    fail(ErrorCode::kOutOfRange, "freq_shift: |shift| " + std::to_string(std::abs(shift)) +
                                     " exceeds " + std::to_string(max_shift));
  }
  FeatureTensor out = feature;
  if (shift == 0) return out;
  const auto bins = static_cast<std::ptrdiff_t>(feature.num_bins());
  for (std::size_t c = 0; c < feature.num_channels(); ++c) {
    if (!feature.roles[c].is_frequency_axis()) continue;
    for (std::size_t t = 0; t < feature.num_frames(); ++t) {
      const auto in = feature.data.row(c, t);
      auto o = out.data.row(c, t);
      for (std::ptrdiff_t b = 0; b < bins; ++b) {
        o[static_cast<std::size_t>(b)] =
            in[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b - shift, 0, bins - 1))];
      }
    }
  }
  return out;
}

}  // namespace seld
