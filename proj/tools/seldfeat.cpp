// seldfeat: feature extraction, simulation, augmentation, evaluation and
// timing for microphone-array SELD data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seld/augment.hpp"
#include "seld/error.hpp"
#include "seld/features.hpp"
#include "seld/geometry.hpp"
#include "seld/io.hpp"
#include "seld/metrics.hpp"
#include "seld/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

unsigned resolve_threads(unsigned flag) {
  if (const char* env = std::getenv("SELD_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw UsageError("SELD_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return flag == 0 ? seld::ExecPolicy::hardware().threads : flag;
}

seld::ArrayGeometry geometry_from(const std::string& path) {
  return path.empty() ? seld::ArrayGeometry::tetrahedral() : seld::load_geometry(path);
}

// ---- extract ----

struct ExtractArgs {
  std::vector<std::string> inputs;
  std::string feature;
  std::string geometry;
  std::string out = ".";
  std::string config;
  std::optional<std::size_t> hop, n_fft, win, mel_bands;
  std::optional<double> cutoff, spatial_low, spatial_high;
  bool no_magnitude_test = false, no_coherence_test = false;
  unsigned threads = 0;
  bool fail_fast = false;
};

seld::FeatureConfig build_config(const ExtractArgs& a) {
  std::optional<seld::FeatureKind> kind;
  if (!a.feature.empty()) {
    kind = seld::parse_feature_kind(a.feature);
    if (!kind) throw UsageError("unknown feature '" + a.feature + "'");
  }
  seld::FeatureConfig cfg = seld::FeatureConfig::defaults(kind.value_or(seld::FeatureKind::kSalsaLite));
  if (!a.config.empty()) {
    const std::string text = seld::read_file(a.config);
    // A kind in the file selects its defaults before the other keys apply.
    const auto probe = seld::config_from_json(text, cfg);
    cfg = seld::config_from_json(text, seld::FeatureConfig::defaults(kind.value_or(probe.kind)));
  }
  if (kind) cfg.kind = *kind;
  if (a.hop) cfg.stft.hop_length = *a.hop;
  if (a.n_fft) cfg.stft.n_fft = *a.n_fft;
  if (a.win) cfg.stft.win_length = *a.win;
  if (a.mel_bands) cfg.mel_bands = *a.mel_bands;
  if (a.cutoff) cfg.spec_cutoff_hz = *a.cutoff;
  if (a.spatial_low) cfg.spatial_low_hz = *a.spatial_low;
  if (a.spatial_high) cfg.spatial_high_hz = *a.spatial_high;
  if (a.no_magnitude_test) cfg.use_magnitude_test = false;
  if (a.no_coherence_test) cfg.use_coherence_test = false;
  cfg.validate();
  return cfg;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (e.is_regular_file() && ext == ".wav") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.emplace_back(in);
    }
  }
  return files;
}

int run_extract(const ExtractArgs& a) {
  const seld::FeatureConfig cfg = build_config(a);
  const seld::ArrayGeometry geom = geometry_from(a.geometry);
  const seld::ExecPolicy exec{resolve_threads(a.threads)};
  const auto files = expand_inputs(a.inputs);
  if (files.empty()) throw UsageError("no input files");
  fs::create_directories(a.out);

  int status = kExitOk;
  for (const auto& file : files) {
    try {
      const auto audio = seld::read_wav(file.string());
      const auto feature = seld::build_feature(audio, cfg, geom, exec);
      const fs::path out = fs::path(a.out) / (file.stem().string() + ".seldft");
      seld::write_feature(out.string(), feature);
      std::cerr << file.string() << " -> " << out.string() << " (" << feature.num_channels()
                << "x" << feature.num_frames() << "x" << feature.num_bins() << ")\n";
    } catch (const seld::Error& e) {
      std::cerr << "error: " << file.string() << ": " << e.what() << "\n";
      status = kExitRuntime;
      if (a.fail_fast) break;
    }
  }
  return status;
}

// ---- bench ----

struct BenchArgs {
  std::string input;
  std::size_t repeats = 3;
  unsigned threads = 0;
  double duration = 60.0;
  std::uint64_t seed = 0;
};

seld::MultichannelAudio bench_clip(double duration, std::uint64_t seed) {
  seld::SceneSpec scene;
  scene.duration = duration;
  scene.snr_db = 20.0;
  scene.noise_seed = seed + 100;
  scene.sources.push_back({30.0, 10.0, seld::WhiteNoise{seed}, 0.0, duration, 0, 0.1});
  scene.sources.push_back({-120.0, -20.0, seld::WhiteNoise{seed + 1}, 0.0, duration, 1, 0.05});
  return seld::synthesize(scene).audio;
}

int run_bench(const BenchArgs& a) {
  if (a.repeats < 3) throw UsageError("--repeats must be at least 3");
  const unsigned threads = resolve_threads(a.threads);
  const seld::ArrayGeometry geom = seld::ArrayGeometry::tetrahedral();
  const auto audio = a.input.empty() ? bench_clip(a.duration, a.seed) : seld::read_wav(a.input);
  const seld::ExecPolicy exec{threads};

  const seld::FeatureKind kinds[] = {seld::FeatureKind::kSalsaLite, seld::FeatureKind::kSalsaIpd,
                                     seld::FeatureKind::kMelSpecGcc, seld::FeatureKind::kSalsa};
  json results = json::array();
  double lite_mean = 0.0;
  for (const auto kind : kinds) {
    const auto cfg = seld::FeatureConfig::defaults(kind);
    std::vector<double> samples;
    for (std::size_t r = 0; r < a.repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto feat = seld::build_feature(audio, cfg, geom, exec);
      const auto t1 = std::chrono::steady_clock::now();
      if (feat.data.empty()) throw seld::Error(seld::ErrorCode::kEmptySignal, "empty feature");
      samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    double mean = 0.0;
    for (const double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (const double s : samples) var += (s - mean) * (s - mean);
    const double stddev = std::sqrt(var / static_cast<double>(samples.size() - 1));
    if (kind == seld::FeatureKind::kSalsaLite) lite_mean = mean;
    results.push_back({{"feature", std::string(seld::to_string(kind))},
                       {"samples", samples},
                       {"mean", mean},
                       {"std", stddev},
                       {"ratio_vs_salsa_lite", mean / lite_mean}});
  }
  const json report{
      {"clip",
       {{"source", a.input.empty() ? "synthetic" : a.input},
        {"channels", audio.num_channels()},
        {"samples", audio.length()},
        {"sample_rate", audio.sample_rate()},
        {"seconds", static_cast<double>(audio.length()) / audio.sample_rate()}}},
      {"threads", threads},
      {"repeats", a.repeats},
      {"results", results}};
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

// ---- simulate ----

struct SimulateArgs {
  std::string scene;
  std::string out;
  std::string format = "float";
};

int run_simulate(const SimulateArgs& a) {
  const auto spec = seld::load_scene(a.scene);
  const auto scene = seld::synthesize(spec);
  const auto fmt = a.format == "pcm16" ? seld::WavSampleFormat::kPcm16 : seld::WavSampleFormat::kFloat32;
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  seld::write_wav(a.out + ".wav", scene.audio, fmt);
  seld::write_annotations(a.out + ".csv", scene.events);
  std::cerr << a.out << ".wav, " << a.out << ".csv: " << scene.audio.num_channels() << " channels, "
            << scene.events.num_frames() << " label frames\n";
  return kExitOk;
}

// ---- augment ----

struct AugmentArgs {
  std::string in;
  std::string out;
  std::string op;
  std::uint64_t seed = 0;
  int amount = 0;
  std::optional<std::size_t> index;
  std::string mode = "rect";
  std::optional<std::size_t> time_span, freq_span;
  float fill = 0.0f;
  std::string geometry;
  std::string labels_in, labels_out;
};

int run_augment(const AugmentArgs& a) {
  const auto feature = seld::read_feature(a.in);
  seld::FeatureTensor result;
  if (a.op == "shift") {
    result = seld::freq_shift(feature, a.amount);
  } else if (a.op == "mask") {
    const auto mode = a.mode == "cross" ? seld::MaskMode::kCrossSpecAugment : seld::MaskMode::kRectCutout;
    auto spec = seld::default_mask_spec(feature, mode, a.seed);
    if (a.time_span) spec.time_span = *a.time_span;
    if (a.freq_span) spec.freq_span = *a.freq_span;
    spec.fill_value = a.fill;
    result = seld::apply_mask(feature, spec);
  } else {
    const auto table = seld::derive_swap_table(geometry_from(a.geometry));
    const std::size_t idx = a.index.value_or(a.seed % table.size());
    if (idx >= table.size()) {
      throw UsageError("--index must be below " + std::to_string(table.size()));
    }
    const auto& t = table[idx];
    result = seld::apply_swap_feature(feature, t);
    if (!a.labels_in.empty()) {
      const auto grid = seld::read_annotations(a.labels_in);
      seld::write_annotations(a.labels_out.empty() ? a.out + ".csv" : a.labels_out,
                              seld::apply_swap_labels(grid, t));
    }
    std::cerr << "swap " << idx << ": azimuth " << t.azimuth_sign << "*phi+" << 90 * t.rotation
              << ", elevation " << t.elevation_sign << "*theta\n";
  }
  seld::write_feature(a.out, result);
  return kExitOk;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string pred;
  std::string ref;
  std::size_t num_classes = seld::kDefaultNumClasses;
};

int run_evaluate(const EvaluateArgs& a) {
  auto pred = seld::read_annotations(a.pred, a.num_classes);
  auto ref = seld::read_annotations(a.ref, a.num_classes);
  const std::size_t frames = std::max(pred.num_frames(), ref.num_frames());
  pred.frames.resize(frames);
  ref.frames.resize(frames);
  const auto r = seld::evaluate(pred, ref);
  const auto& c = r.counts;
  const json report{{"er20", r.er20},
                    {"f20", r.f20},
                    {"le_cd", r.le_cd},
                    {"lr_cd", r.lr_cd},
                    {"e_seld", r.e_seld},
                    {"counts",
                     {{"tp", c.tp},
                      {"fp", c.fp},
                      {"fn", c.fn},
                      {"fp_spatial", c.fp_spatial},
                      {"substitutions", c.substitutions},
                      {"deletions", c.deletions},
                      {"insertions", c.insertions},
                      {"num_ref", c.num_ref}}}};
  std::cout << report.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SELD feature toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "seldfeat 0.1.0");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Compute features for WAV files");
  extract->add_option("--input,-i", ex.inputs, "WAV file or directory")->required();
  extract->add_option("--feature,-f", ex.feature, "salsa-lite | salsa | salsa-ipd | melspecgcc");
  extract->add_option("--geometry,-g", ex.geometry, "Microphone positions file (default tetrahedral)");
  extract->add_option("--out,-o", ex.out, "Output directory");
  extract->add_option("--config,-c", ex.config, "JSON file with FeatureConfig fields");
  extract->add_option("--hop", ex.hop);
  extract->add_option("--n-fft", ex.n_fft);
  extract->add_option("--win-length", ex.win);
  extract->add_option("--mel-bands", ex.mel_bands);
  extract->add_option("--cutoff-hz", ex.cutoff);
  extract->add_option("--spatial-low-hz", ex.spatial_low);
  extract->add_option("--spatial-high-hz", ex.spatial_high);
  extract->add_flag("--no-magnitude-test", ex.no_magnitude_test);
  extract->add_flag("--no-coherence-test", ex.no_coherence_test);
  extract->add_option("--threads,-j", ex.threads, "Worker threads (0 = all cores)");
  extract->add_flag("--fail-fast", ex.fail_fast, "Stop at the first failing file");

  BenchArgs be;
  auto* bench = app.add_subcommand("bench", "Time all four features on one clip");
  bench->add_option("--input,-i", be.input, "WAV clip (default: synthetic 4-channel clip)");
  bench->add_option("--repeats,-r", be.repeats);
  bench->add_option("--threads,-j", be.threads);
  bench->add_option("--duration", be.duration, "Synthetic clip length in seconds");
  bench->add_option("--seed", be.seed);

  SimulateArgs si;
  auto* simulate = app.add_subcommand("simulate", "Render a scene file to WAV + CSV");
  simulate->add_option("--scene,-s", si.scene)->required();
  simulate->add_option("--out,-o", si.out, "Output prefix")->required();
  simulate->add_option("--format", si.format)->check(CLI::IsMember({"float", "pcm16"}));

  AugmentArgs au;
  auto* augment = app.add_subcommand("augment", "Apply one augmentation to a feature file");
  augment->add_option("--in,-i", au.in)->required();
  augment->add_option("--out,-o", au.out)->required();
  augment->add_option("--op", au.op)->required()->check(CLI::IsMember({"swap", "mask", "shift"}));
  augment->add_option("--seed", au.seed);
  augment->add_option("--amount", au.amount, "Frequency shift in bins");
  augment->add_option("--index", au.index, "Swap table entry (default: seed mod table size)");
  augment->add_option("--mode", au.mode)->check(CLI::IsMember({"rect", "cross"}));
  augment->add_option("--time-span", au.time_span);
  augment->add_option("--freq-span", au.freq_span);
  augment->add_option("--fill", au.fill);
  augment->add_option("--geometry,-g", au.geometry);
  augment->add_option("--labels", au.labels_in, "Annotation CSV to remap alongside a swap");
  augment->add_option("--labels-out", au.labels_out);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a reference");
  evaluate->add_option("--pred,-p", ev.pred)->required();
  evaluate->add_option("--ref,-r", ev.ref)->required();
  evaluate->add_option("--num-classes", ev.num_classes);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (extract->parsed()) return run_extract(ex);
    if (bench->parsed()) return run_bench(be);
    if (simulate->parsed()) return run_simulate(si);
    if (augment->parsed()) return run_augment(au);
    if (evaluate->parsed()) return run_evaluate(ev);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const seld::Error& e) {
    std::cerr << "error [" << seld::to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
