#include "seld/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "seld/error.hpp"
#include "seld/io.hpp"

namespace seld {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double blackman(double x, double half_width) {
  if (std::abs(x) >= half_width) return 0.0;
  const double a = std::numbers::pi * x / half_width;
  return 0.42 + 0.5 * std::cos(a) + 0.08 * std::cos(2.0 * a);
}

void check_angles(double azimuth, double elevation) {
  if (!(azimuth >= -180.0 && azimuth < 180.0) ||
      !(elevation >= -90.0 && elevation <= 90.0)) {
    fail(ErrorCode::kOutOfRange, "simulate: DOA (" + std::to_string(azimuth) + ", " +
                                     std::to_string(elevation) + ") out of range");
  }
}

std::vector<double> white_noise(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> s(n);
  for (auto& v : s) v = dist(rng);
  return s;
}

void normalise_rms(std::vector<double>& s, double rms) {
  double p = 0.0;
  for (const double v : s) p += v * v;
  if (s.empty() || p <= 0.0) return;
  const double k = rms / std::sqrt(p / static_cast<double>(s.size()));
  for (auto& v : s) v *= k;
}

// Source waveform over scene sample indices [-lead, n + lead), gated to
// [onset, offset).
std::vector<double> render_source(const SourceSpec& src, const SceneSpec& scene,
                                  std::size_t n, std::size_t lead) {
  const std::size_t len = n + 2 * lead;
  const double fs = scene.sample_rate;
  std::vector<double> s(len, 0.0);
  std::visit(
      [&](const auto& sig) {
        using T = std::decay_t<decltype(sig)>;
        if constexpr (std::is_same_v<T, WhiteNoise>) {
          s = white_noise(sig.seed, len);
          normalise_rms(s, src.gain);
        } else if constexpr (std::is_same_v<T, Sine>) {
          const double amp = src.gain * std::numbers::sqrt2;
          for (std::size_t i = 0; i < len; ++i) {
            const double t = (static_cast<double>(i) - static_cast<double>(lead)) / fs;
            s[i] = amp * std::sin(2.0 * std::numbers::pi * sig.frequency_hz * t + sig.phase);
          }
        } else if constexpr (std::is_same_v<T, BandNoise>) {
          std::vector<double> w = white_noise(sig.seed, len);
          const std::size_t fft_len = len + (len % 2);
          w.resize(fft_len, 0.0);
          const RealFft fft(fft_len);
          std::vector<cdouble> spec(fft_len / 2 + 1);
          fft.forward(w, spec);
          const double df = fs / static_cast<double>(fft_len);
          for (std::size_t k = 0; k < spec.size(); ++k) {
            const double f = static_cast<double>(k) * df;
            if (f < sig.low_hz || f > sig.high_hz) spec[k] = 0.0;
          }
          fft.inverse(spec, w);
          w.resize(len);
          s = std::move(w);
          normalise_rms(s, src.gain);
        } else {
          const MultichannelAudio file = read_wav(sig.path);
          if (file.sample_rate() != fs) {
            fail(ErrorCode::kSampleRateMismatch,
                 "simulate: " + sig.path + " is not at the scene sample rate");
          }
          if (sig.channel >= file.num_channels()) {
            fail(ErrorCode::kInvalidArgument,
                 "simulate: " + sig.path + " has no channel " + std::to_string(sig.channel));
          }
          const auto first = static_cast<std::ptrdiff_t>(std::llround(src.onset * fs));
          const auto last = static_cast<std::ptrdiff_t>(std::llround(src.offset * fs));
          if (static_cast<std::ptrdiff_t>(file.length()) < last - first) {
            fail(ErrorCode::kInvalidArgument,
                 "simulate: " + sig.path + " is shorter than its event span");
          }
          const auto x = file.channel(sig.channel);
          for (std::ptrdiff_t i = first; i < last; ++i) {
            const std::ptrdiff_t k = i + static_cast<std::ptrdiff_t>(lead);
            if (k >= 0 && k < static_cast<std::ptrdiff_t>(len)) {
              s[static_cast<std::size_t>(k)] =
                  src.gain * static_cast<double>(x[static_cast<std::size_t>(i - first)]);
            }
          }
        }
      },
      src.signal);

  const double on = src.onset * fs, off = src.offset * fs;
  for (std::size_t i = 0; i < len; ++i) {
    const double idx = static_cast<double>(i) - static_cast<double>(lead);
    if (idx < on || idx >= off) s[i] = 0.0;
  }
  return s;
}

}  // namespace

void SceneSpec::validate() const {
  require(duration > 0.0 && std::isfinite(duration), ErrorCode::kInvalidArgument,
          "scene: duration must be positive");
  require(sample_rate > 0.0, ErrorCode::kInvalidArgument,
          "scene: sample_rate must be positive");
  require(speed_of_sound > 0.0, ErrorCode::kInvalidArgument,
          "scene: speed_of_sound must be positive");
  if (snr_db) {
    require(std::isfinite(*snr_db), ErrorCode::kInvalidArgument,
            "scene: snr_db must be finite");
  }
  for (const auto& s : sources) {
    check_angles(s.azimuth, s.elevation);
    require(s.onset >= 0.0 && s.onset < s.offset, ErrorCode::kInvalidArgument,
            "scene: need 0 <= onset < offset");
    require(s.class_id >= 0 && static_cast<std::size_t>(s.class_id) < num_classes,
            ErrorCode::kOutOfRange, "scene: class id outside vocabulary");
    require(s.gain >= 0.0 && std::isfinite(s.gain), ErrorCode::kInvalidArgument,
            "scene: gain must be >= 0");
    if (const auto* b = std::get_if<BandNoise>(&s.signal)) {
      require(b->low_hz >= 0.0 && b->low_hz < b->high_hz, ErrorCode::kInvalidArgument,
              "scene: band noise needs low < high");
    }
  }
}

Vec3 unit_direction(double azimuth, double elevation) {
  const double az = azimuth * kDeg, el = elevation * kDeg;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

std::vector<double> rdoa(const ArrayGeometry& geom, double azimuth, double elevation) {
  const Vec3 u = unit_direction(azimuth, elevation);
  const Vec3& r1 = geom.position(0);
  std::vector<double> d;
  for (std::size_t m = 1; m < geom.size(); ++m) {
    const Vec3& rm = geom.position(m);
    d.push_back(dot({r1[0] - rm[0], r1[1] - rm[1], r1[2] - rm[2]}, u));
  }
  return d;
}

std::vector<cdouble> steering_vector(const ArrayGeometry& geom, double freq_hz,
                                     double azimuth, double elevation,
                                     double speed_of_sound) {
  require(freq_hz >= 0.0, ErrorCode::kInvalidArgument,
          "steering_vector: frequency must be >= 0");
  const auto d = rdoa(geom, azimuth, elevation);
  std::vector<cdouble> h{1.0};
  for (const double dm : d) {
    h.push_back(std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * dm / speed_of_sound));
  }
  return h;
}

void fractional_delay(std::span<const double> source, std::size_t lead, double delay,
                      std::span<double> out) {
  constexpr auto half = static_cast<std::ptrdiff_t>(kFractionalDelayTaps / 2);
  const auto len = static_cast<std::ptrdiff_t>(source.size());
  auto at = [&](std::ptrdiff_t i) {
    const std::ptrdiff_t k = i + static_cast<std::ptrdiff_t>(lead);
    return (k >= 0 && k < len) ? source[static_cast<std::size_t>(k)] : 0.0;
  };
  const double whole = std::floor(delay);
  const double frac = delay - whole;
  if (frac == 0.0) {
    const auto shift = static_cast<std::ptrdiff_t>(whole);
    for (std::size_t n = 0; n < out.size(); ++n) {
      out[n] = at(static_cast<std::ptrdiff_t>(n) - shift);
    }
    return;
  }
  // Target time n - delay = i0 + mu with mu in [0, 1).
  const double mu = 1.0 - frac;
  const auto base = -static_cast<std::ptrdiff_t>(whole) - 1;
  std::array<double, kFractionalDelayTaps> kernel{};
  for (std::ptrdiff_t k = -half + 1; k <= half; ++k) {
    const double x = mu - static_cast<double>(k);
    kernel[static_cast<std::size_t>(k + half - 1)] =
        sinc(x) * blackman(x, static_cast<double>(half));
  }
  for (std::size_t n = 0; n < out.size(); ++n) {
    const std::ptrdiff_t i0 = static_cast<std::ptrdiff_t>(n) + base;
    double acc = 0.0;
    for (std::ptrdiff_t k = -half + 1; k <= half; ++k) {
      acc += kernel[static_cast<std::size_t>(k + half - 1)] * at(i0 + k);
    }
    out[n] = acc;
  }
}

Scene synthesize(const SceneSpec& scene) {
  scene.validate();
  const double fs = scene.sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(scene.duration * fs));
  require(n > 0, ErrorCode::kInvalidArgument, "scene: duration shorter than one sample");
  const std::size_t channels = scene.geometry.size();
  const double max_delay = scene.geometry.max_distance() / scene.speed_of_sound * fs;
  const std::size_t lead =
      static_cast<std::size_t>(std::ceil(max_delay)) + kFractionalDelayTaps;

  // Label grid first: it also enforces the polyphony limit.
  SeldEventGrid grid;
  grid.num_classes = scene.num_classes;
  const auto label_frames =
      static_cast<std::size_t>(std::ceil(scene.duration / kLabelFrameSeconds - 1e-9));
  grid.frames.resize(label_frames);
  for (std::size_t i = 0; i < label_frames; ++i) {
    const double a = static_cast<double>(i) * kLabelFrameSeconds;
    const double b = a + kLabelFrameSeconds;
    for (std::size_t s = 0; s < scene.sources.size(); ++s) {
      const auto& src = scene.sources[s];
      if (src.onset < b && src.offset > a) {
        grid.frames[i].push_back(
            {src.class_id, static_cast<int>(s), src.azimuth, src.elevation});
      }
    }
    if (grid.frames[i].size() > scene.max_polyphony) {
      fail(ErrorCode::kInvalidArgument,
           "scene: " + std::to_string(grid.frames[i].size()) +
               " simultaneous sources at frame " + std::to_string(i) + " exceed limit");
    }
  }

  std::vector<std::vector<double>> mix(channels, std::vector<double>(n, 0.0));
  std::vector<double> delayed(n);
  for (const auto& src : scene.sources) {
    const std::vector<double> s = render_source(src, scene, n, lead);
    const Vec3 u = unit_direction(src.azimuth, src.elevation);
    for (std::size_t m = 0; m < channels; ++m) {
      const double delay = -dot(scene.geometry.position(m), u) / scene.speed_of_sound * fs;
      fractional_delay(s, lead, delay, delayed);
      for (std::size_t i = 0; i < n; ++i) mix[m][i] += delayed[i];
    }
  }

  if (scene.snr_db) {
    double p = 0.0;
    for (const auto& ch : mix) {
      for (const double v : ch) p += v * v;
    }
    p /= static_cast<double>(channels * n);
    const double sigma = std::sqrt(p * std::pow(10.0, -*scene.snr_db / 10.0));
    std::mt19937_64 rng(scene.noise_seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (auto& ch : mix) {
      for (double& v : ch) v += sigma * dist(rng);
    }
  }

  MultichannelAudio audio(channels, n, fs);
  for (std::size_t m = 0; m < channels; ++m) {
    auto dst = audio.channel(m);
    for (std::size_t i = 0; i < n; ++i) dst[i] = static_cast<float>(mix[m][i]);
  }
  return {std::move(audio), std::move(grid)};
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key, int lineno) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(ErrorCode::kFormat, "scene: line " + std::to_string(lineno) + ": '" + key +
                                 "' expects a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_u64(const std::string& v, const std::string& key, int lineno) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    fail(ErrorCode::kFormat, "scene: line " + std::to_string(lineno) + ": '" + key +
                                 "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

SourceSpec parse_source(const std::string& value, const std::string& base_dir,
                        int lineno) {
  std::map<std::string, std::string> kv;
  std::istringstream in(value);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) {
      fail(ErrorCode::kFormat,
           "scene: line " + std::to_string(lineno) + ": expected key=value, got '" + tok + "'");
    }
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto num = [&](const std::string& key, double fallback) {
    const auto v = take(key);
    return v ? to_double(*v, key, lineno) : fallback;
  };

  SourceSpec src;
  src.azimuth = num("azimuth", 0.0);
  src.elevation = num("elevation", 0.0);
  src.onset = num("onset", 0.0);
  src.offset = num("offset", -1.0);
  src.class_id = static_cast<int>(num("class", 0.0));
  const std::string kind = take("signal").value_or("white");
  if (kind == "white") {
    const auto seed = take("seed");
    src.signal = WhiteNoise{seed ? to_u64(*seed, "seed", lineno) : 0};
  } else if (kind == "sine") {
    src.signal = Sine{num("freq", 1000.0), num("phase", 0.0)};
  } else if (kind == "band") {
    const auto seed = take("seed");
    src.signal = BandNoise{seed ? to_u64(*seed, "seed", lineno) : 0, num("low", 0.0),
                           num("high", 0.0)};
  } else if (kind == "file") {
    const auto path = take("path");
    if (!path) {
      fail(ErrorCode::kFormat, "scene: line " + std::to_string(lineno) + ": file needs path=");
    }
    std::filesystem::path p(*path);
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    src.signal = FileRef{p.string(), static_cast<std::size_t>(num("channel", 0.0))};
    src.gain = 1.0;
  } else {
    fail(ErrorCode::kFormat,
         "scene: line " + std::to_string(lineno) + ": unknown signal '" + kind + "'");
  }
  src.gain = num("gain", src.gain);
  if (!kv.empty()) {
    fail(ErrorCode::kFormat, "scene: line " + std::to_string(lineno) +
                                 ": unknown source key '" + kv.begin()->first + "'");
  }
  return src;
}

}  // namespace

SceneSpec parse_scene(const std::string& text, const std::string& base_dir) {
  SceneSpec scene;
  std::vector<Vec3> mics;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kFormat, "scene: line " + std::to_string(lineno) + " has no '='");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "sample_rate") scene.sample_rate = to_double(value, key, lineno);
    else if (key == "duration") scene.duration = to_double(value, key, lineno);
    else if (key == "speed_of_sound") scene.speed_of_sound = to_double(value, key, lineno);
    else if (key == "noise_seed") scene.noise_seed = to_u64(value, key, lineno);
    else if (key == "max_polyphony") scene.max_polyphony = to_u64(value, key, lineno);
    else if (key == "num_classes") scene.num_classes = to_u64(value, key, lineno);
    else if (key == "snr_db") {
      if (value == "none") scene.snr_db.reset();
      else scene.snr_db = to_double(value, key, lineno);
    } else if (key == "geometry") {
      if (value != "tetrahedral") {
        fail(ErrorCode::kFormat, "scene: line " + std::to_string(lineno) +
                                     ": geometry must be 'tetrahedral' (or use mic = x y z)");
      }
      scene.geometry = ArrayGeometry::tetrahedral();
    } else if (key == "mic") {
      std::istringstream ls(value);
      Vec3 p{};
      std::string extra;
      if (!(ls >> p[0] >> p[1] >> p[2]) || (ls >> extra)) {
        fail(ErrorCode::kFormat, "scene: line " + std::to_string(lineno) + ": mic = x y z");
      }
      mics.push_back(p);
    } else if (key == "source") {
      scene.sources.push_back(parse_source(value, base_dir, lineno));
    } else {
      fail(ErrorCode::kFormat,
           "scene: line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!mics.empty()) scene.geometry = ArrayGeometry(std::move(mics));
  for (auto& s : scene.sources) {
    if (s.offset < 0.0) s.offset = scene.duration;
  }
  scene.validate();
  return scene;
}

SceneSpec load_scene(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::kIo, "scene: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_scene(ss.str(), parent.empty() ? "." : parent.string());
}

}  // namespace seld
