#include "seld/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "json.hpp"
#include "seld/error.hpp"

namespace seld {

using nlohmann::json;

namespace {

// ---- little-endian helpers ----

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_le(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

const unsigned char* bytes_of(const std::string& s) {
  return reinterpret_cast<const unsigned char*>(s.data());
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) fail(ErrorCode::kIo, "read error on " + path);
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::kIo, "cannot create " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) {
      f.close();
      std::filesystem::remove(tmp);
      fail(ErrorCode::kIo, "write error on " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorCode::kIo, "cannot rename onto " + path + ": " + ec.message());
  }
}

// ---- WAV ----

MultichannelAudio read_wav(const std::string& path) {
  const std::string raw = read_file(path);
  const unsigned char* p = bytes_of(raw);
  const std::size_t size = raw.size();
  if (size < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::kFormat, path + ": not a RIFF/WAVE file");
  }
  std::uint16_t tag = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const unsigned char* chunk = p + pos;
    const std::size_t len = get_le(chunk + 4, 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16 || body + len > size) fail(ErrorCode::kFormat, path + ": bad fmt chunk");
      tag = static_cast<std::uint16_t>(get_le(p + body, 2));
      channels = static_cast<std::uint16_t>(get_le(p + body + 2, 2));
      rate = static_cast<std::uint32_t>(get_le(p + body + 4, 4));
      block_align = static_cast<std::uint16_t>(get_le(p + body + 12, 2));
      bits = static_cast<std::uint16_t>(get_le(p + body + 14, 2));
      if (tag == 0xFFFE) {
        if (len < 40) fail(ErrorCode::kFormat, path + ": short extensible fmt chunk");
        tag = static_cast<std::uint16_t>(get_le(p + body + 24, 2));
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + len > size) fail(ErrorCode::kFormat, path + ": truncated data chunk");
      data = p + body;
      data_size = len;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || data == nullptr) fail(ErrorCode::kFormat, path + ": missing fmt or data");
  if (channels < 1) fail(ErrorCode::kFormat, path + ": zero channels");
  const bool is_float = tag == 3 && bits == 32;
  const bool is_pcm = tag == 1 && (bits == 16 || bits == 24 || bits == 32);
  if (!is_float && !is_pcm) {
    fail(ErrorCode::kFormat, path + ": unsupported codec (tag " + std::to_string(tag) +
                                 ", " + std::to_string(bits) + " bits)");
  }
  const std::size_t width = bits / 8;
  if (block_align != channels * width) fail(ErrorCode::kFormat, path + ": bad block align");
  const std::size_t frames = data_size / block_align;

  MultichannelAudio audio(channels, frames, static_cast<double>(rate));
  const double scale = is_pcm ? std::ldexp(1.0, -(bits - 1)) : 1.0;
  for (std::size_t m = 0; m < channels; ++m) {
    auto dst = audio.channel(m);
    for (std::size_t i = 0; i < frames; ++i) {
      const unsigned char* s = data + i * block_align + m * width;
      const std::uint64_t u = get_le(s, static_cast<int>(width));
      if (is_float) {
        dst[i] = std::bit_cast<float>(static_cast<std::uint32_t>(u));
      } else {
        // Sign-extend the bits-wide integer.
        const std::int64_t v = static_cast<std::int64_t>(u << (64 - bits)) >> (64 - bits);
        dst[i] = static_cast<float>(static_cast<double>(v) * scale);
      }
    }
  }
  return audio;
}

void write_wav(const std::string& path, const MultichannelAudio& audio,
               WavSampleFormat format) {
  require(audio.num_channels() >= 1, ErrorCode::kInvalidArgument, "write_wav: no channels");
  const double rate = audio.sample_rate();
  require(rate > 0 && rate <= std::numeric_limits<std::uint32_t>::max() &&
              rate == std::floor(rate),
          ErrorCode::kInvalidArgument, "write_wav: sample rate must be a positive integer");
  const bool fl = format == WavSampleFormat::kFloat32;
  const std::uint16_t channels = static_cast<std::uint16_t>(audio.num_channels());
  const std::uint16_t width = fl ? 4 : 2;
  const std::uint16_t align = static_cast<std::uint16_t>(channels * width);
  const std::uint64_t data_size = static_cast<std::uint64_t>(align) * audio.length();
  require(data_size + 36 <= std::numeric_limits<std::uint32_t>::max(),
          ErrorCode::kInvalidArgument, "write_wav: too large for RIFF");

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, static_cast<std::uint32_t>(36 + data_size));
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, fl ? 3 : 1);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(rate));
  put_u32(out, static_cast<std::uint32_t>(rate) * align);
  put_u16(out, align);
  put_u16(out, static_cast<std::uint16_t>(width * 8));
  out += "data";
  put_u32(out, static_cast<std::uint32_t>(data_size));
  for (std::size_t i = 0; i < audio.length(); ++i) {
    for (std::size_t m = 0; m < channels; ++m) {
      const float x = audio.channel(m)[i];
      if (fl) {
        put_u32(out, std::bit_cast<std::uint32_t>(x));
      } else {
        const double q = std::clamp(std::round(static_cast<double>(x) * 32768.0), -32768.0, 32767.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      }
    }
  }
  write_file_atomic(path, out);
}

// ---- tensors ----

namespace {

constexpr std::size_t kFixedHeader = 8 + 1 + 1;

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (const auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / 4 / d) {
      fail(ErrorCode::kFormat, "tensor dims overflow");
    }
    n *= d;
  }
  return n;
}

std::string encode_tensor(const std::vector<std::uint64_t>& dims,
                          const std::vector<float>& payload) {
  require(dims.size() <= 255, ErrorCode::kInvalidArgument, "tensor: too many dims");
  require(element_count(dims) == payload.size(), ErrorCode::kShapeMismatch,
          "tensor: payload size does not match dims");
  std::string out;
  out.reserve(feature_file_size(dims));
  out.append(kFeatureMagic.data(), kFeatureMagic.size());
  out.push_back(0);
  out.push_back(static_cast<char>(dims.size()));
  for (const auto d : dims) put_u64(out, d);
  for (const float v : payload) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

RawTensor decode_tensor(const std::string& raw, const std::string& path) {
  const unsigned char* p = bytes_of(raw);
  if (raw.size() < kFixedHeader ||
      std::memcmp(p, kFeatureMagic.data(), kFeatureMagic.size()) != 0) {
    fail(ErrorCode::kFormat, path + ": bad magic");
  }
  if (p[8] != 0) fail(ErrorCode::kFormat, path + ": unsupported dtype " + std::to_string(p[8]));
  const std::size_t ndim = p[9];
  if (raw.size() < kFixedHeader + 8 * ndim) fail(ErrorCode::kFormat, path + ": truncated header");
  RawTensor t;
  for (std::size_t i = 0; i < ndim; ++i) t.dims.push_back(get_le(p + kFixedHeader + 8 * i, 8));
  const std::uint64_t n = element_count(t.dims);
  const std::uint64_t expect = kFixedHeader + 8 * ndim + 4 * n;
  if (raw.size() != expect) {
    fail(ErrorCode::kFormat, path + ": payload is " + std::to_string(raw.size()) +
                                 " bytes, header implies " + std::to_string(expect));
  }
  t.payload.resize(n);
  const unsigned char* body = p + kFixedHeader + 8 * ndim;
  for (std::uint64_t i = 0; i < n; ++i) {
    t.payload[i] = std::bit_cast<float>(static_cast<std::uint32_t>(get_le(body + 4 * i, 4)));
  }
  return t;
}

json config_json(const FeatureConfig& c) {
  return json{
      {"kind", std::string(to_string(c.kind))},
      {"sample_rate", c.stft.sample_rate},
      {"win_length", c.stft.win_length},
      {"hop_length", c.stft.hop_length},
      {"n_fft", c.stft.n_fft},
      {"window", "hann"},
      {"center_pad", c.stft.center_pad},
      {"spec_cutoff_hz", c.spec_cutoff_hz},
      {"spatial_low_hz", c.spatial_low_hz},
      {"spatial_high_hz", c.spatial_high_hz},
      {"mel_bands", c.mel_bands},
      {"mel_f_min_hz", c.mel_f_min_hz},
      {"use_magnitude_test", c.use_magnitude_test},
      {"use_coherence_test", c.use_coherence_test},
      {"coherence_threshold", c.coherence_threshold},
      {"magnitude_margin_db", c.magnitude_margin_db},
      {"noise_floor_percentile", c.noise_floor_percentile},
      {"scm_time_radius", c.scm_time_radius},
      {"scm_freq_radius", c.scm_freq_radius},
      {"speed_of_sound", c.speed_of_sound},
      {"log_floor", c.log_floor},
  };
}

std::string_view axis_kind_name(AxisMeta::Kind k) {
  switch (k) {
    case AxisMeta::Kind::kLinearFrequency: return "linear";
    case AxisMeta::Kind::kMel: return "mel";
    case AxisMeta::Kind::kLag: return "lag";
  }
  return "linear";
}

AxisMeta::Kind parse_axis_kind(const std::string& s) {
  if (s == "linear") return AxisMeta::Kind::kLinearFrequency;
  if (s == "mel") return AxisMeta::Kind::kMel;
  if (s == "lag") return AxisMeta::Kind::kLag;
  fail(ErrorCode::kFormat, "sidecar: unknown axis kind '" + s + "'");
}

}  // namespace

std::uint64_t feature_file_size(const std::vector<std::uint64_t>& dims) {
  return kFixedHeader + 8 * dims.size() + 4 * element_count(dims);
}

void write_tensor(const std::string& path, const std::vector<std::uint64_t>& dims,
                  const std::vector<float>& payload) {
  write_file_atomic(path, encode_tensor(dims, payload));
}

RawTensor read_tensor(const std::string& path) {
  return decode_tensor(read_file(path), path);
}

std::string sidecar_path(const std::string& path) { return path + ".json"; }

std::string config_to_json(const FeatureConfig& cfg) { return config_json(cfg).dump(); }

FeatureConfig config_from_json(std::string_view text, const FeatureConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::kFormat, "config: expected a JSON object");
  FeatureConfig c = base;
  if (const auto it = j.find("kind"); it != j.end()) {
    const auto kind = parse_feature_kind(it->get<std::string>());
    if (!kind) fail(ErrorCode::kFormat, "config: unknown kind '" + it->get<std::string>() + "'");
    c.kind = *kind;
  }
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "kind") continue;
      else if (key == "sample_rate") c.stft.sample_rate = v.get<double>();
      else if (key == "win_length") c.stft.win_length = v.get<std::size_t>();
      else if (key == "hop_length") c.stft.hop_length = v.get<std::size_t>();
      else if (key == "n_fft") c.stft.n_fft = v.get<std::size_t>();
      else if (key == "window") {
        if (v.get<std::string>() != "hann") fail(ErrorCode::kFormat, "config: only hann window");
      } else if (key == "center_pad") c.stft.center_pad = v.get<bool>();
      else if (key == "spec_cutoff_hz") c.spec_cutoff_hz = v.get<double>();
      else if (key == "spatial_low_hz") c.spatial_low_hz = v.get<double>();
      else if (key == "spatial_high_hz") c.spatial_high_hz = v.get<double>();
      else if (key == "mel_bands") c.mel_bands = v.get<std::size_t>();
      else if (key == "mel_f_min_hz") c.mel_f_min_hz = v.get<double>();
      else if (key == "use_magnitude_test") c.use_magnitude_test = v.get<bool>();
      else if (key == "use_coherence_test") c.use_coherence_test = v.get<bool>();
      else if (key == "coherence_threshold") c.coherence_threshold = v.get<double>();
      else if (key == "magnitude_margin_db") c.magnitude_margin_db = v.get<double>();
      else if (key == "noise_floor_percentile") c.noise_floor_percentile = v.get<double>();
      else if (key == "scm_time_radius") c.scm_time_radius = v.get<std::size_t>();
      else if (key == "scm_freq_radius") c.scm_freq_radius = v.get<std::size_t>();
      else if (key == "speed_of_sound") c.speed_of_sound = v.get<double>();
      else if (key == "log_floor") c.log_floor = v.get<double>();
      else fail(ErrorCode::kFormat, "config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("config: ") + e.what());
  }
  return c;
}

std::string config_hash(const FeatureConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : config_to_json(cfg)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_feature(const std::string& path, const FeatureTensor& feature) {
  const auto& d = feature.data;
  require(feature.roles.size() == d.dim(0) && feature.axes.size() == d.dim(0),
          ErrorCode::kShapeMismatch, "write_feature: roles/axes do not match channels");
  json roles = json::array();
  for (const auto& r : feature.roles) roles.push_back(r.label());
  json axes = json::array();
  for (const auto& a : feature.axes) {
    axes.push_back({{"kind", axis_kind_name(a.kind)},
                    {"size", a.size},
                    {"start", a.start},
                    {"step", a.step},
                    {"f_min", a.f_min},
                    {"f_max", a.f_max}});
  }
  const json side{{"format", "SELDFT01"},
                  {"kind", std::string(to_string(feature.kind))},
                  {"shape", {d.dim(0), d.dim(1), d.dim(2)}},
                  {"config", config_json(feature.config)},
                  {"config_hash", config_hash(feature.config)},
                  {"channel_roles", roles},
                  {"axis_meta", axes}};
  const std::vector<std::uint64_t> dims{d.dim(0), d.dim(1), d.dim(2)};
  const std::vector<float> payload(d.data().begin(), d.data().end());
  write_file_atomic(path, encode_tensor(dims, payload));
  write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

FeatureTensor read_feature(const std::string& path) {
  RawTensor raw = read_tensor(path);
  if (raw.dims.size() != 3) fail(ErrorCode::kFormat, path + ": feature tensors are 3-D");
  json side;
  try {
    side = json::parse(read_file(sidecar_path(path)));
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, sidecar_path(path) + ": " + e.what());
  }
  FeatureTensor f;
  try {
    const auto kind = parse_feature_kind(side.at("kind").get<std::string>());
    if (!kind) fail(ErrorCode::kFormat, path + ": unknown feature kind in sidecar");
    f.kind = *kind;
    f.config = config_from_json(side.at("config").dump(), FeatureConfig::defaults(f.kind));
    const auto shape = side.at("shape").get<std::vector<std::uint64_t>>();
    if (shape != raw.dims) fail(ErrorCode::kFormat, path + ": sidecar shape differs from header");
    for (const auto& r : side.at("channel_roles")) {
      f.roles.push_back(ChannelRole::parse(r.get<std::string>()));
    }
    for (const auto& a : side.at("axis_meta")) {
      f.axes.push_back({parse_axis_kind(a.at("kind").get<std::string>()),
                        a.at("size").get<std::size_t>(), a.at("start").get<double>(),
                        a.at("step").get<double>(), a.at("f_min").get<double>(),
                        a.at("f_max").get<double>()});
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, sidecar_path(path) + ": " + e.what());
  }
  if (f.roles.size() != raw.dims[0] || f.axes.size() != raw.dims[0]) {
    fail(ErrorCode::kFormat, path + ": sidecar channel count differs from header");
  }
  f.data = RealTensor(raw.dims[0], raw.dims[1], raw.dims[2], 0.0f);
  std::copy(raw.payload.begin(), raw.payload.end(), f.data.data().begin());
  return f;
}

// ---- annotations ----

namespace {

template <typename T>
T parse_field(std::string_view s, std::size_t lineno, const char* what) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    fail(ErrorCode::kFormat, "annotations: line " + std::to_string(lineno) + ": bad " + what +
                                 " '" + std::string(s) + "'");
  }
  return v;
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, p);
}

}  // namespace

SeldEventGrid parse_annotations(std::string_view text, std::size_t num_classes,
                                std::size_t min_frames) {
  SeldEventGrid grid;
  grid.num_classes = num_classes;
  std::size_t lineno = 0;
  long long last_frame = -1;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 5) {
      fail(ErrorCode::kFormat, "annotations: line " + std::to_string(lineno) +
                                   ": expected 5 fields, got " + std::to_string(fields.size()));
    }
    const auto frame = parse_field<long long>(fields[0], lineno, "frame");
    SeldEvent e;
    e.class_id = parse_field<int>(fields[1], lineno, "class");
    e.track_id = parse_field<int>(fields[2], lineno, "track");
    e.azimuth = parse_field<double>(fields[3], lineno, "azimuth");
    e.elevation = parse_field<double>(fields[4], lineno, "elevation");
    if (frame < 0) fail(ErrorCode::kFormat, "annotations: line " + std::to_string(lineno) + ": negative frame");
    if (frame < last_frame) {
      fail(ErrorCode::kFormat, "annotations: line " + std::to_string(lineno) +
                                   ": frame index decreases");
    }
    if (e.class_id < 0 || static_cast<std::size_t>(e.class_id) >= num_classes) {
      fail(ErrorCode::kOutOfRange, "annotations: line " + std::to_string(lineno) +
                                       ": class outside vocabulary");
    }
    if (!(e.azimuth >= -180.0 && e.azimuth < 180.0) ||
        !(e.elevation >= -90.0 && e.elevation <= 90.0)) {
      fail(ErrorCode::kOutOfRange, "annotations: line " + std::to_string(lineno) +
                                       ": angle out of range");
    }
    last_frame = frame;
    const auto idx = static_cast<std::size_t>(frame);
    if (grid.frames.size() <= idx) grid.frames.resize(idx + 1);
    grid.frames[idx].push_back(e);
  }
  if (grid.frames.size() < min_frames) grid.frames.resize(min_frames);
  return grid;
}

SeldEventGrid read_annotations(const std::string& path, std::size_t num_classes,
                               std::size_t min_frames) {
  return parse_annotations(read_file(path), num_classes, min_frames);
}

std::string format_annotations(const SeldEventGrid& grid) {
  grid.validate();
  std::string out;
  for (std::size_t t = 0; t < grid.num_frames(); ++t) {
    for (const auto& e : grid.frames[t]) {
      out += std::to_string(t);
      out += ',';
      out += std::to_string(e.class_id);
      out += ',';
      out += std::to_string(e.track_id);
      out += ',';
      append_number(out, e.azimuth);
      out += ',';
      append_number(out, e.elevation);
      out += '\n';
    }
  }
  return out;
}

void write_annotations(const std::string& path, const SeldEventGrid& grid) {
  write_file_atomic(path, format_annotations(grid));
}

}  // namespace seld
