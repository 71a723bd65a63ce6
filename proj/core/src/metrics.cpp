#include "seld/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "seld/error.hpp"

namespace seld {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kDeg = std::numbers::pi / 180.0;

// Hungarian algorithm with potentials; requires n <= m. a is 1-based
// (n+1) x (m+1). Returns p where p[j] is the row matched to column j.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& a,
                                   std::size_t n, std::size_t m) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0][j] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  return p;
}

// Per class: frames of the segment (offset within segment) -> DOAs.
using ClassFrames = std::map<std::size_t, std::vector<const SeldEvent*>>;
using SegmentEvents = std::map<int, ClassFrames>;

SegmentEvents collect(const SeldEventGrid& grid, std::size_t begin, std::size_t end) {
  SegmentEvents out;
  for (std::size_t t = begin; t < end; ++t) {
    for (const auto& e : grid.frames[t]) out[e.class_id][t - begin].push_back(&e);
  }
  return out;
}

std::size_t max_count(const ClassFrames& frames) {
  std::size_t n = 0;
  for (const auto& [t, evs] : frames) n = std::max(n, evs.size());
  return n;
}

}  // namespace

double angular_distance(double az_a, double el_a, double az_b, double el_b) {
  // Vincenty form: exact zero for identical points, stable near 0 and 180.
  const double sa = std::sin(el_a * kDeg), ca = std::cos(el_a * kDeg);
  const double sb = std::sin(el_b * kDeg), cb = std::cos(el_b * kDeg);
  const double d = (az_a - az_b) * kDeg;
  const double y1 = cb * std::sin(d);
  const double y2 = ca * sb - sa * cb * std::cos(d);
  const double x = sa * sb + ca * cb * std::cos(d);
  return std::atan2(std::hypot(y1, y2), x) / kDeg;
}

std::vector<int> solve_assignment(const std::vector<double>& cost, std::size_t rows,
                                  std::size_t cols) {
  require(cost.size() == rows * cols, ErrorCode::kShapeMismatch,
          "solve_assignment: cost size does not match rows x cols");
  std::vector<int> out(rows, -1);
  if (rows == 0 || cols == 0) return out;
  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;
  const std::size_t m = transposed ? rows : cols;
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(m + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      a[i + 1][j + 1] = transposed ? cost[j * cols + i] : cost[i * cols + j];
    }
  }
  const auto p = hungarian(a, n, m);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] == 0) continue;
    const std::size_t i = p[j] - 1;
    if (transposed) {
      out[j - 1] = static_cast<int>(i);
    } else {
      out[i] = static_cast<int>(j - 1);
    }
  }
  return out;
}

MetricsReport evaluate(const SeldEventGrid& pred, const SeldEventGrid& ref) {
  require(pred.num_frames() == ref.num_frames(), ErrorCode::kShapeMismatch,
          "evaluate: prediction and reference frame counts differ");
  require(pred.num_classes == ref.num_classes, ErrorCode::kShapeMismatch,
          "evaluate: class vocabularies differ");
  pred.validate();
  ref.validate();

  MetricsCounts c;
  const std::size_t frames = ref.num_frames();
  for (std::size_t seg = 0; seg < frames; seg += kSegmentFrames) {
    const std::size_t end = std::min(frames, seg + kSegmentFrames);
    const SegmentEvents gt = collect(ref, seg, end);
    const SegmentEvents pr = collect(pred, seg, end);
    double loc_fp = 0, loc_fn = 0;

    for (int cls = 0; cls < static_cast<int>(ref.num_classes); ++cls) {
      const auto g = gt.find(cls);
      const auto p = pr.find(cls);
      const bool has_g = g != gt.end(), has_p = p != pr.end();
      const double nb_gt = has_g ? static_cast<double>(max_count(g->second)) : 0.0;
      const double nb_pred = has_p ? static_cast<double>(max_count(p->second)) : 0.0;
      c.num_ref += nb_gt;

      if (has_g && has_p) {
        // Distances of frame-wise optimal matches, keyed by the reference's
        // position within its frame.
        std::map<std::size_t, std::vector<double>> track_dist;
        for (const auto& [t, gevs] : g->second) {
          const auto pf = p->second.find(t);
          if (pf == p->second.end()) continue;
          const auto& pevs = pf->second;
          std::vector<double> cost(gevs.size() * pevs.size());
          for (std::size_t i = 0; i < gevs.size(); ++i) {
            for (std::size_t j = 0; j < pevs.size(); ++j) {
              cost[i * pevs.size() + j] =
                  angular_distance(gevs[i]->azimuth, gevs[i]->elevation,
                                   pevs[j]->azimuth, pevs[j]->elevation);
            }
          }
          const auto match = solve_assignment(cost, gevs.size(), pevs.size());
          for (std::size_t i = 0; i < gevs.size(); ++i) {
            if (match[i] >= 0) {
              track_dist[i].push_back(cost[i * pevs.size() + static_cast<std::size_t>(match[i])]);
            }
          }
        }
        if (track_dist.empty()) {
          // Same class in the segment but never in the same frame.
          loc_fn += nb_pred;
          c.fn += nb_pred;
          c.de_fn += nb_pred;
        } else {
          for (const auto& [track, dists] : track_dist) {
            double mean = 0.0;
            for (const double d : dists) mean += d;
            mean /= static_cast<double>(dists.size());
            c.total_de += mean;
            c.de_tp += 1;
            if (mean > kDoaThreshold) {
              c.fp_spatial += 1;
              loc_fp += 1;
            } else {
              c.tp += 1;
            }
          }
          if (nb_pred > nb_gt) {
            loc_fp += nb_pred - nb_gt;
            c.fp += nb_pred - nb_gt;
          } else if (nb_pred < nb_gt) {
            loc_fn += nb_gt - nb_pred;
            c.fn += nb_gt - nb_pred;
            c.de_fn += nb_gt - nb_pred;
          }
        }
      } else if (has_g) {
        loc_fn += nb_gt;
        c.fn += nb_gt;
        c.de_fn += nb_gt;
      } else if (has_p) {
        loc_fp += nb_pred;
        c.fp += nb_pred;
      }
    }
    c.substitutions += std::min(loc_fp, loc_fn);
    c.deletions += std::max(0.0, loc_fn - loc_fp);
    c.insertions += std::max(0.0, loc_fp - loc_fn);
  }

  MetricsReport r;
  r.counts = c;
  r.er20 = (c.substitutions + c.deletions + c.insertions) / (c.num_ref + kEps);
  r.f20 = c.tp / (kEps + c.tp + c.fp_spatial + 0.5 * (c.fp + c.fn));
  r.le_cd = c.de_tp > 0 ? c.total_de / c.de_tp : kUndefinedLocalization;
  r.lr_cd = c.de_tp / (kEps + c.de_tp + c.de_fn);
  r.e_seld = seld_error(std::max(0.0, r.er20), std::clamp(r.f20, 0.0, 1.0),
                        std::clamp(r.le_cd, 0.0, 180.0), std::clamp(r.lr_cd, 0.0, 1.0));
  return r;
}

double seld_error(double er20, double f20, double le_cd, double lr_cd) {
  require(std::isfinite(er20) && er20 >= 0.0, ErrorCode::kOutOfRange,
          "seld_error: ER must be >= 0");
  require(f20 >= 0.0 && f20 <= 1.0, ErrorCode::kOutOfRange, "seld_error: F outside [0, 1]");
  require(le_cd >= 0.0 && le_cd <= 180.0, ErrorCode::kOutOfRange,
          "seld_error: LE outside [0, 180]");
  require(lr_cd >= 0.0 && lr_cd <= 1.0, ErrorCode::kOutOfRange,
          "seld_error: LR outside [0, 1]");
  return 0.25 * (er20 + (1.0 - f20) + le_cd / 180.0 + (1.0 - lr_cd));
}

}  // namespace seld
