#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "seld/dsp.hpp"
#include "seld/events.hpp"
#include "seld/features.hpp"

namespace seld {

// ---- WAV ----

enum class WavSampleFormat { kFloat32, kPcm16 };

// PCM 16/24/32-bit or IEEE float 32-bit, plain or WAVE_FORMAT_EXTENSIBLE.
// Integer PCM is scaled by 2^-(bits-1).
MultichannelAudio read_wav(const std::string& path);
void write_wav(const std::string& path, const MultichannelAudio& audio,
               WavSampleFormat format = WavSampleFormat::kFloat32);

// ---- feature tensors ----

inline constexpr std::array<char, 8> kFeatureMagic = {'S', 'E', 'L', 'D',
                                                      'F', 'T', '0', '1'};

// Header bytes plus payload for a tensor of the given dims.
std::uint64_t feature_file_size(const std::vector<std::uint64_t>& dims);

// Bare container: header + float32 little-endian row-major payload.
void write_tensor(const std::string& path, const std::vector<std::uint64_t>& dims,
                  const std::vector<float>& payload);
struct RawTensor {
  std::vector<std::uint64_t> dims;
  std::vector<float> payload;
};
RawTensor read_tensor(const std::string& path);

// Tensor file plus "<path>.json" sidecar with kind, config, config hash,
// channel roles and axis metadata.
std::string sidecar_path(const std::string& path);
void write_feature(const std::string& path, const FeatureTensor& feature);
FeatureTensor read_feature(const std::string& path);

// FeatureConfig as JSON using the struct's field names. Missing keys keep the
// values of `base`; unknown keys are rejected.
std::string config_to_json(const FeatureConfig& cfg);
FeatureConfig config_from_json(std::string_view json, const FeatureConfig& base);
// FNV-1a 64 of the canonical config JSON, as 16 hex digits.
std::string config_hash(const FeatureConfig& cfg);

// ---- annotations ----

// Rows "frame,class,track,azimuth,elevation", frame in 100 ms units,
// non-decreasing. The grid spans max(min_frames, last frame + 1) frames.
SeldEventGrid parse_annotations(std::string_view text,
                                std::size_t num_classes = kDefaultNumClasses,
                                std::size_t min_frames = 0);
SeldEventGrid read_annotations(const std::string& path,
                               std::size_t num_classes = kDefaultNumClasses,
                               std::size_t min_frames = 0);
std::string format_annotations(const SeldEventGrid& grid);
void write_annotations(const std::string& path, const SeldEventGrid& grid);

// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

}  // namespace seld
