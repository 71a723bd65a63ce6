// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "seld/augment.hpp"
#include "seld/error.hpp"
#include "seld/features.hpp"
#include "seld/io.hpp"
#include "seld/linalg.hpp"
#include "seld/metrics.hpp"
#include "seld/simulate.hpp"

namespace fs = std::filesystem;
using seld::FeatureConfig;
using seld::FeatureKind;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const seld::ArrayGeometry kTetra = seld::ArrayGeometry::tetrahedral();

// ---------------------------------------------------------------------------

Outcome seld_error_rows() {
  struct Row {
    double er, f, le, lr, expected;
  };
  const Row rows[] = {
      {0.660, 0.455, 21.1, 0.521, 0.450}, {0.528, 0.601, 15.9, 0.644, 0.343},
      {0.542, 0.576, 17.5, 0.635, 0.357}, {0.512, 0.609, 16.9, 0.657, 0.335},
      {0.507, 0.614, 17.9, 0.679, 0.328}, {0.408, 0.715, 12.6, 0.728, 0.259},
      {0.415, 0.703, 12.4, 0.701, 0.270}, {0.409, 0.707, 12.3, 0.716, 0.264},
      {0.415, 0.703, 12.4, 0.701, 0.270}, {0.434, 0.690, 12.4, 0.699, 0.279},
      {0.409, 0.707, 12.3, 0.716, 0.264}, {0.423, 0.699, 12.6, 0.714, 0.270},
  };
  double worst = 0.0;
  for (const auto& r : rows) {
    worst = std::max(worst, std::abs(seld::seld_error(r.er, r.f, r.le, r.lr) - r.expected));
  }
  return {worst <= 0.001 + 1e-12, fmt("12 rows, max |diff| %.5f", worst)};
}

// ---------------------------------------------------------------------------

Outcome timing() {
  seld::SceneSpec scene;
  scene.duration = 60.0;
  scene.snr_db = 20.0;
  scene.noise_seed = 100;
  scene.sources.push_back({30.0, 10.0, seld::WhiteNoise{1}, 0.0, 60.0, 0, 0.1});
  scene.sources.push_back({-120.0, -20.0, seld::WhiteNoise{2}, 0.0, 60.0, 1, 0.05});
  const auto audio = seld::synthesize(scene).audio;

  auto time_kind = [&](FeatureKind kind) {
    const auto cfg = FeatureConfig::defaults(kind);
    std::vector<double> t;
    for (int r = 0; r < 3; ++r) {
      const auto start = std::chrono::steady_clock::now();
      const auto f = seld::build_feature(audio, cfg, kTetra);
      t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      if (f.data.empty()) return -1.0;
    }
    return std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
  };
  const double lite = time_kind(FeatureKind::kSalsaLite);
  const double mel = time_kind(FeatureKind::kMelSpecGcc);
  const double salsa = time_kind(FeatureKind::kSalsa);
  const double ratio = salsa / lite;
  return {lite < mel && mel < salsa && ratio >= 5.0,
          fmt("salsa-lite %.3f s, melspecgcc %.3f s, salsa %.3f s, salsa/lite %.1f", lite, mel,
              salsa, ratio)};
}

// ---------------------------------------------------------------------------

Outcome rdoa_recovery() {
  std::mt19937_64 rng(2021);
  std::uniform_real_distribution<double> az(-180.0, 180.0), el(-45.0, 45.0);
  const auto lite = FeatureConfig::defaults(FeatureKind::kSalsaLite);
  const auto salsa = FeatureConfig::defaults(FeatureKind::kSalsa);
  double worst_nipd = 0.0, worst_epv = 0.0, worst_identity = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double a = std::min(az(rng), 179.999), e = el(rng);
    const auto truth = seld::rdoa(kTetra, a, e);
    const auto audio = oracle::single_source(a, e, 1.0, 500 + static_cast<std::uint64_t>(i));

    const auto fl = seld::build_feature(audio, lite, kTetra);
    const auto [llo, lhi] = lite.spatial_bins();
    std::vector<double> err;
    for (std::size_t m = 0; m < 3; ++m) {
      for (std::size_t t = 1; t + 1 < fl.num_frames(); ++t) {
        for (std::size_t b = llo; b <= lhi; ++b) err.push_back(std::abs(fl.data(4 + m, t, b - 1) - truth[m]));
      }
    }
    worst_nipd = std::max(worst_nipd, oracle::median(err));

    const auto fs_ = seld::build_feature(audio, salsa, kTetra);
    const auto [slo, shi] = salsa.spatial_bins();
    err.clear();
    for (std::size_t t = 1; t + 1 < fs_.num_frames(); ++t) {
      for (std::size_t b = slo; b <= shi; ++b) {
        if (fs_.data(4, t, b - 1) == 0.0f && fs_.data(5, t, b - 1) == 0.0f && fs_.data(6, t, b - 1) == 0.0f) {
          continue;  // rejected by the single-source tests
        }
        for (std::size_t m = 0; m < 3; ++m) err.push_back(std::abs(fs_.data(4 + m, t, b - 1) - truth[m]));
      }
    }
    worst_epv = std::max(worst_epv, err.empty() ? INFINITY : oracle::median(err));

    for (std::size_t b = llo; b <= lhi; ++b) {
      const double f = static_cast<double>(b) * lite.stft.bin_hz();
      const auto h = seld::steering_vector(kTetra, f, a, e);
      const auto n = seld::nipd_vector(h, f);
      for (std::size_t m = 0; m < 3; ++m) worst_identity = std::max(worst_identity, std::abs(n[m] - truth[m]));
    }
  }
  return {worst_nipd <= 0.005 && worst_epv <= 0.005 && worst_identity <= 1e-12,
          fmt("50 DOAs, worst median |NIPD-rdoa| %.2f mm, |EPV-rdoa| %.2f mm, steering identity %.1e m",
              worst_nipd * 1e3, worst_epv * 1e3, worst_identity)};
}

// ---------------------------------------------------------------------------

Outcome nipd_ipd_identity() {
  double worst = 0.0;
  std::size_t cells = 0;
  auto check = [&](const seld::MultichannelAudio& audio, double high_hz) {
    auto lc = FeatureConfig::defaults(FeatureKind::kSalsaLite);
    auto ic = FeatureConfig::defaults(FeatureKind::kSalsaIpd);
    lc.spatial_high_hz = ic.spatial_high_hz = high_hz;
    const auto n = seld::build_feature(audio, lc, kTetra);
    const auto p = seld::build_feature(audio, ic, kTetra);
    const auto [lo, hi] = lc.spatial_bins();
    for (std::size_t c = 4; c < 7; ++c) {
      for (std::size_t t = 0; t < n.num_frames(); ++t) {
        for (std::size_t b = 1; b <= n.num_bins(); ++b) {
          const double nv = n.data(c, t, b - 1), pv = p.data(c, t, b - 1);
          if (b < lo || b > hi) {
            if (nv != 0.0 || pv != 0.0) worst = INFINITY;
            continue;
          }
          const double f = static_cast<double>(b) * lc.stft.bin_hz();
          const double expect = pv * lc.speed_of_sound / f;
          const double scale = std::max(std::abs(nv), std::abs(expect));
          if (scale > 0.0) worst = std::max(worst, std::abs(nv - expect) / scale);
          ++cells;
        }
      }
    }
  };
  check(oracle::white_audio(4, 48000, 31), 2000.0);
  check(oracle::white_audio(4, 48000, 32), 9000.0);
  check(oracle::single_source(-70.0, 25.0, 2.0, 33), 2000.0);
  return {worst <= 1e-6, fmt("%zu in-band cells, max relative error %.2e", cells, worst)};
}

// ---------------------------------------------------------------------------

Outcome gcc_delay() {
  const std::size_t n = 24000 * 5;
  std::size_t hits = 0, frames = 0;
  for (int tau = -10; tau <= 10; ++tau) {
    const auto src = oracle::white_audio(1, n + 40, 700 + static_cast<std::uint64_t>(tau + 10));
    seld::MultichannelAudio a(2, n, 24000.0);
    for (std::size_t i = 0; i < n; ++i) {
      a.channel(0)[i] = src.channel(0)[static_cast<std::size_t>(static_cast<int>(i) + 20 - tau)];
      a.channel(1)[i] = src.channel(0)[i + 20];
    }
    const auto gcc = seld::compute_gcc_phat(seld::stft(a, seld::StftConfig{}), 128);
    for (std::size_t t = 0; t < gcc.dim(1); ++t, ++frames) {
      const auto row = gcc.row(0, t);
      const auto best = std::max_element(row.begin(), row.end()) - row.begin();
      hits += best - 63 == tau;
    }
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(frames);
  return {rate >= 0.99, fmt("tau -10..10, %zu/%zu frames at the true lag (%.2f%%)", hits, frames, 100.0 * rate)};
}

// ---------------------------------------------------------------------------

Outcome shape_contracts() {
  std::vector<std::string> problems;
  const auto audio = oracle::single_source(40.0, -10.0, 3.0, 41);
  const std::size_t T = audio.length() / 300 + 1;
  for (const auto kind : {FeatureKind::kSalsaLite, FeatureKind::kSalsaIpd, FeatureKind::kSalsa,
                          FeatureKind::kMelSpecGcc}) {
    const auto cfg = FeatureConfig::defaults(kind);
    const auto f = seld::build_feature(audio, cfg, kTetra);
    const bool mel = kind == FeatureKind::kMelSpecGcc;
    const std::array<std::size_t, 3> want = {mel ? 10u : 7u, T, mel ? 128u : 192u};
    if (f.data.shape() != want) problems.push_back(std::string(seld::to_string(kind)) + " shape");
    if (mel) continue;
    const double high = kind == FeatureKind::kSalsa ? 4000.0 : 2000.0;
    std::size_t nonzero_in = 0;
    for (std::size_t c = 4; c < 7; ++c) {
      for (std::size_t t = 0; t < f.num_frames(); ++t) {
        for (std::size_t b = 1; b <= 192; ++b) {
          const double hz = static_cast<double>(b) * 46.875;
          const bool inside = hz >= 50.0 && hz <= high;
          const float v = f.data(c, t, b - 1);
          if (!inside && v != 0.0f) {
            problems.push_back(fmt("%s nonzero at %.1f Hz", std::string(seld::to_string(kind)).c_str(), hz));
            c = 7;
            break;
          }
          nonzero_in += inside && v != 0.0f;
        }
        if (c == 7) break;
      }
    }
    if (nonzero_in == 0) problems.push_back(std::string(seld::to_string(kind)) + " empty band");
  }
  return {problems.empty(), problems.empty() ? fmt("T = %zu; 7x%zux192 and 10x%zux128, bands zero outside", T, T, T)
                                             : problems.front()};
}

// ---------------------------------------------------------------------------

Outcome swap_table() {
  const auto table = seld::derive_swap_table(kTetra);
  bool group = table.size() == 8 && table.front().is_identity();
  for (const auto& a : table) {
    if (std::find(table.begin(), table.end(), seld::inverse(a)) == table.end()) group = false;
    if (!seld::compose(a, seld::inverse(a)).is_identity()) group = false;
    for (const auto& b : table) {
      if (std::find(table.begin(), table.end(), seld::compose(a, b)) == table.end()) group = false;
    }
  }

  double worst = 0.0;
  const std::pair<double, double> doas[] = {{25.0, 15.0}, {-140.0, -35.0}, {95.0, 60.0}};
  for (const auto& [az, el] : doas) {
    const auto audio = oracle::single_source(az, el, 0.5, 61);
    for (const auto& t : table) {
      const auto [maz, mel] = t.map_doa(az, el);
      const auto expect = oracle::single_source(maz, mel, 0.5, 61);
      const auto got = seld::apply_swap_audio(audio, t);
      for (std::size_t i = 0; i < got.samples().size(); ++i) {
        worst = std::max(worst, static_cast<double>(std::abs(got.samples()[i] - expect.samples()[i])));
      }
    }
  }

  const auto mel = seld::build_feature(oracle::white_audio(4, 24000, 62),
                                       FeatureConfig::defaults(FeatureKind::kMelSpecGcc), kTetra);
  bool gcc_identical = true;
  for (int shift = -10; shift <= 10; ++shift) {
    const auto s = seld::freq_shift(mel, shift);
    for (std::size_t c = 4; c < 10; ++c) {
      const auto x = s.data.channel(c), y = mel.data.channel(c);
      if (std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) != 0) gcc_identical = false;
    }
  }
  return {group && worst <= 1e-6 && gcc_identical,
          fmt("%zu transforms, group %s, audio max diff %.2e, GCC under shift %s", table.size(),
              group ? "ok" : "broken", worst, gcc_identical ? "bit-identical" : "changed")};
}

// ---------------------------------------------------------------------------

// Exhaustive version of the segment-level counting for scenes where each
// frame holds at most a few events per class.
seld::MetricsCounts exhaustive_counts(const seld::SeldEventGrid& pred, const seld::SeldEventGrid& ref) {
  seld::MetricsCounts c;
  const std::size_t segs = (ref.num_frames() + 9) / 10;
  for (std::size_t s = 0; s < segs; ++s) {
    double loc_fp = 0, loc_fn = 0;
    for (int cls = 0; cls < static_cast<int>(ref.num_classes); ++cls) {
      std::vector<std::vector<const seld::SeldEvent*>> r(10), p(10);
      std::size_t nr = 0, np = 0;
      for (std::size_t k = 0; k < 10 && s * 10 + k < ref.num_frames(); ++k) {
        for (const auto& e : ref.frames[s * 10 + k]) {
          if (e.class_id == cls) r[k].push_back(&e);
        }
        for (const auto& e : pred.frames[s * 10 + k]) {
          if (e.class_id == cls) p[k].push_back(&e);
        }
        nr = std::max(nr, r[k].size());
        np = std::max(np, p[k].size());
      }
      c.num_ref += static_cast<double>(nr);
      if (nr == 0 && np == 0) continue;
      if (nr == 0) {
        c.fp += static_cast<double>(np);
        loc_fp += static_cast<double>(np);
        continue;
      }
      if (np == 0) {
        c.fn += static_cast<double>(nr);
        loc_fn += static_cast<double>(nr);
        c.de_fn += static_cast<double>(nr);
        continue;
      }
      // Per reference slot: summed distance and matched frame count.
      std::vector<double> dist(nr, 0.0), hits(nr, 0.0);
      for (std::size_t k = 0; k < 10; ++k) {
        if (r[k].empty() || p[k].empty()) continue;
        std::vector<std::size_t> perm(p[k].size());
        std::iota(perm.begin(), perm.end(), 0);
        double best = INFINITY;
        std::vector<std::size_t> best_perm;
        do {
          double sum = 0.0;
          for (std::size_t i = 0; i < std::min(r[k].size(), perm.size()); ++i) {
            sum += seld::angular_distance(r[k][i]->azimuth, r[k][i]->elevation, p[k][perm[i]]->azimuth,
                                          p[k][perm[i]]->elevation);
          }
          if (sum < best) {
            best = sum;
            best_perm = perm;
          }
        } while (std::next_permutation(perm.begin(), perm.end()));
        for (std::size_t i = 0; i < std::min(r[k].size(), best_perm.size()); ++i) {
          dist[i] += seld::angular_distance(r[k][i]->azimuth, r[k][i]->elevation,
                                            p[k][best_perm[i]]->azimuth, p[k][best_perm[i]]->elevation);
          hits[i] += 1.0;
        }
      }
      for (std::size_t i = 0; i < nr; ++i) {
        if (hits[i] == 0.0) continue;
        const double mean = dist[i] / hits[i];
        c.total_de += mean;
        c.de_tp += 1.0;
        if (mean <= 20.0) {
          c.tp += 1.0;
        } else {
          c.fp_spatial += 1.0;
          loc_fp += 1.0;
        }
      }
      if (np > nr) {
        c.fp += static_cast<double>(np - nr);
        loc_fp += static_cast<double>(np - nr);
      } else if (nr > np) {
        c.fn += static_cast<double>(nr - np);
        loc_fn += static_cast<double>(nr - np);
        c.de_fn += static_cast<double>(nr - np);
      }
    }
    c.substitutions += std::min(loc_fp, loc_fn);
    c.deletions += std::max(0.0, loc_fn - loc_fp);
    c.insertions += std::max(0.0, loc_fp - loc_fn);
  }
  return c;
}

bool same_counts(const seld::MetricsCounts& a, const seld::MetricsCounts& b) {
  return a.tp == b.tp && a.fp == b.fp && a.fn == b.fn && a.fp_spatial == b.fp_spatial &&
         a.substitutions == b.substitutions && a.deletions == b.deletions && a.insertions == b.insertions &&
         a.num_ref == b.num_ref && a.de_tp == b.de_tp && a.de_fn == b.de_fn &&
         std::abs(a.total_de - b.total_de) <= 1e-9;
}

Outcome metrics_oracle() {
  seld::SeldEventGrid ref, pred;
  ref.num_classes = pred.num_classes = 3;
  ref.frames.resize(20);
  pred.frames.resize(20);
  for (std::size_t t = 0; t < 10; ++t) {
    // Two class-0 sources, predicted in swapped order.
    ref.frames[t] = {{0, 0, 0.0, 0.0}, {0, 1, 90.0, 0.0}};
    pred.frames[t] = {{0, 0, 85.0, 0.0}, {0, 1, 15.0, 0.0}};
    if (t >= 2 && t < 6) pred.frames[t].push_back({1, 0, -90.0, 0.0});  // no reference
  }
  for (std::size_t t = 10; t < 20; ++t) {
    ref.frames[t] = {{2, 0, -45.0, 10.0}, {0, 0, 0.0, 0.0}};  // class 2 missed
    pred.frames[t] = {{0, 0, 60.0, 0.0}};                      // 60 degrees off
  }
  const auto r = seld::evaluate(pred, ref);
  const auto oracle_counts = exhaustive_counts(pred, ref);

  // Worked by hand: TP 2, FP 1, FN 1, FP_spatial 1, S 1, D 0, I 1, N_ref 4,
  // DE_TP 3, DE_FN 1, total DE 5 + 15 + 60.
  seld::MetricsCounts hand;
  hand.tp = 2;
  hand.fp = 1;
  hand.fn = 1;
  hand.fp_spatial = 1;
  hand.substitutions = 1;
  hand.insertions = 1;
  hand.num_ref = 4;
  hand.de_tp = 3;
  hand.de_fn = 1;
  hand.total_de = 80.0;
  const double eps = std::numeric_limits<double>::epsilon();
  const bool scalars = std::abs(r.er20 - 2.0 / (4.0 + eps)) < 1e-12 &&
                       std::abs(r.f20 - 2.0 / (eps + 2.0 + 1.0 + 0.5 * 2.0)) < 1e-12 &&
                       std::abs(r.le_cd - 80.0 / 3.0) < 1e-9 && std::abs(r.lr_cd - 3.0 / (eps + 4.0)) < 1e-12;

  // Limits.
  const auto perfect = seld::evaluate(ref, ref);
  seld::SeldEventGrid empty;
  empty.num_classes = 3;
  empty.frames.resize(20);
  const auto none = seld::evaluate(empty, ref);
  const bool limits = perfect.er20 == 0.0 && std::abs(perfect.f20 - 1.0) < 1e-12 && perfect.le_cd == 0.0 &&
                      std::abs(perfect.lr_cd - 1.0) < 1e-12 && std::abs(perfect.e_seld) < 1e-12 &&
                      std::abs(none.er20 - 1.0) < 1e-12 && none.f20 == 0.0 && none.le_cd == 180.0 &&
                      none.lr_cd == 0.0 && std::abs(none.e_seld - 1.0) < 1e-12;

  const bool ok = same_counts(r.counts, hand) && same_counts(oracle_counts, hand) && scalars && limits;
  return {ok, fmt("TP %.0f FP %.0f FN %.0f FPsp %.0f S %.0f D %.0f I %.0f; ER %.3f F %.3f LE %.2f LR %.3f; "
                  "limits %s",
                  r.counts.tp, r.counts.fp, r.counts.fn, r.counts.fp_spatial, r.counts.substitutions,
                  r.counts.deletions, r.counts.insertions, r.er20, r.f20, r.le_cd, r.lr_cd,
                  limits ? "ok" : "wrong")};
}

// ---------------------------------------------------------------------------

Outcome eigensolver() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_residual = 0.0, worst_value = 0.0, worst_vector = 0.0;
  std::size_t compared_vectors = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    Eigen::Matrix4cd b;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) b(i, j) = {g(rng), g(rng)};
    }
    const Eigen::Matrix4cd a = b * b.adjoint();
    seld::SmallMatrix r(4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) r(i, j) = a(static_cast<int>(i), static_cast<int>(j));
    }
    const auto ep = seld::principal_eigenvector(r);
    Eigen::Vector4cd u;
    for (int i = 0; i < 4; ++i) u(i) = ep.vector[static_cast<std::size_t>(i)];
    const double trace = a.trace().real();
    worst_residual = std::max(worst_residual, (a * u - ep.value * u).norm() / trace);

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(a);
    const double l1 = es.eigenvalues()(3), l2 = es.eigenvalues()(2);
    worst_value = std::max(worst_value, std::abs(ep.value - l1) / trace);
    if ((l1 - l2) / trace > 1e-3) {
      const Eigen::Vector4cd uo = es.eigenvectors().col(3);
      worst_vector = std::max(worst_vector, std::abs(1.0 - std::abs(uo.dot(u))));
      ++compared_vectors;
    }
  }
  return {worst_residual <= 1e-6 && worst_value <= 1e-8 && worst_vector <= 1e-8,
          fmt("10000 PSD 4x4: residual/trace %.1e, |lambda - oracle|/trace %.1e, eigenvector %.1e (%zu gapped)",
              worst_residual, worst_value, worst_vector, compared_vectors)};
}

// ---------------------------------------------------------------------------

Outcome file_round_trips() {
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() / ("seld_accept_" + std::to_string(rd()));
  fs::create_directories(dir);
  std::vector<std::string> broken;
  auto p = [&](const char* name) { return (dir / name).string(); };

  const auto audio = oracle::single_source(10.0, 5.0, 1.0, 81);
  seld::write_wav(p("a.wav"), audio);
  if (!(seld::read_wav(p("a.wav")) == audio)) broken.push_back("wav float32");

  seld::write_wav(p("b.wav"), audio, seld::WavSampleFormat::kPcm16);
  const auto q = seld::read_wav(p("b.wav"));
  seld::write_wav(p("c.wav"), q, seld::WavSampleFormat::kPcm16);
  if (seld::read_file(p("b.wav")) != seld::read_file(p("c.wav")) || !(seld::read_wav(p("c.wav")) == q)) {
    broken.push_back("wav pcm16");
  }

  for (const auto kind : {FeatureKind::kSalsaLite, FeatureKind::kSalsaIpd, FeatureKind::kSalsa,
                          FeatureKind::kMelSpecGcc}) {
    const auto f = seld::build_feature(audio, FeatureConfig::defaults(kind), kTetra);
    seld::write_feature(p("f.seldft"), f);
    const auto bytes = seld::read_file(p("f.seldft"));
    const auto side = seld::read_file(p("f.seldft.json"));
    const auto g = seld::read_feature(p("f.seldft"));
    seld::write_feature(p("g.seldft"), g);
    const bool same = g.kind == f.kind && g.roles == f.roles && g.axes == f.axes &&
                      seld::config_to_json(g.config) == seld::config_to_json(f.config) &&
                      std::memcmp(g.data.data().data(), f.data.data().data(), f.data.size() * 4) == 0 &&
                      seld::read_file(p("g.seldft")) == bytes && seld::read_file(p("g.seldft.json")) == side &&
                      bytes.size() == seld::feature_file_size({f.data.dim(0), f.data.dim(1), f.data.dim(2)});
    if (!same) broken.push_back(std::string("feature ") + std::string(seld::to_string(kind)));
  }

  seld::SceneSpec scene;
  scene.duration = 3.0;
  scene.sources.push_back({-37.25, 12.5, seld::WhiteNoise{1}, 0.3, 2.2, 4, 0.1});
  scene.sources.push_back({150.0, -40.125, seld::Sine{440.0, 0.0}, 1.0, 3.0, 11, 0.1});
  const auto labels = seld::synthesize(scene).events;
  seld::write_annotations(p("l.csv"), labels);
  const auto back = seld::read_annotations(p("l.csv"), 12, labels.num_frames());
  seld::write_annotations(p("m.csv"), back);
  if (!(back == labels) || seld::read_file(p("l.csv")) != seld::read_file(p("m.csv"))) {
    broken.push_back("annotations");
  }

  auto cfg = FeatureConfig::defaults(FeatureKind::kSalsa);
  cfg.spatial_high_hz = 3500.0;
  cfg.coherence_threshold = 0.6;
  const auto json = seld::config_to_json(cfg);
  if (seld::config_to_json(seld::config_from_json(json, FeatureConfig{})) != json) broken.push_back("config");

  std::error_code ec;
  fs::remove_all(dir, ec);
  return {broken.empty(), broken.empty() ? std::string("wav float32/pcm16, 4 feature kinds + sidecar, annotations, config")
                                         : "mismatch: " + broken.front()};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"seld-error-aggregation", seld_error_rows},
      {"timing-ordering", timing},
      {"rdoa-recovery", rdoa_recovery},
      {"nipd-ipd-identity", nipd_ipd_identity},
      {"gcc-phat-delay", gcc_delay},
      {"shape-contracts", shape_contracts},
      {"swap-table", swap_table},
      {"metrics-hand-oracle", metrics_oracle},
      {"eigensolver", eigensolver},
      {"file-round-trips", file_round_trips},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
