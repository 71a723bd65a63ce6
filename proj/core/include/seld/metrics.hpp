#pragma once

#include <cstddef>
#include <vector>

#include "seld/events.hpp"

namespace seld {

inline constexpr double kDoaThreshold = 20.0;        // degrees
inline constexpr std::size_t kSegmentFrames = 10;    // 1 s of 100 ms frames
inline constexpr double kUndefinedLocalization = 180.0;

struct MetricsCounts {
  double tp = 0;          // class-correct matches within the DOA threshold
  double fp = 0;          // surplus predictions
  double fn = 0;          // missed references
  double fp_spatial = 0;  // class-correct matches beyond the threshold
  double substitutions = 0;
  double deletions = 0;
  double insertions = 0;
  double num_ref = 0;
  double de_tp = 0;       // class-correct matched tracks
  double de_fn = 0;
  double total_de = 0;    // summed per-track mean angular error, degrees
};

struct MetricsReport {
  double er20 = 0.0;
  double f20 = 0.0;
  double le_cd = 0.0;  // degrees
  double lr_cd = 0.0;
  double e_seld = 0.0;
  MetricsCounts counts;
};

// Great-circle distance in degrees between two (azimuth, elevation) pairs.
double angular_distance(double az_a, double el_a, double az_b, double el_b);

// Minimum-cost assignment for a rows x cols cost matrix (row-major). Returns
// for each row the assigned column, or -1 when rows > cols leaves it free.
std::vector<int> solve_assignment(const std::vector<double>& cost,
                                  std::size_t rows, std::size_t cols);

// DCASE 2021 location-aware detection and class-aware localization metrics
// over 1 s segments. Micro-averaged over classes.
MetricsReport evaluate(const SeldEventGrid& pred, const SeldEventGrid& ref);

// (ER + (1 - F) + LE / 180 + (1 - LR)) / 4
double seld_error(double er20, double f20, double le_cd, double lr_cd);

}  // namespace seld
