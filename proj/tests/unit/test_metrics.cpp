#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "seld/error.hpp"
#include "seld/metrics.hpp"

using seld::SeldEvent;
using seld::SeldEventGrid;

namespace {

SeldEventGrid grid(std::size_t frames, std::size_t classes = 12) {
  SeldEventGrid g;
  g.num_classes = classes;
  g.frames.resize(frames);
  return g;
}

void fill(SeldEventGrid& g, std::size_t from, std::size_t to, SeldEvent e) {
  for (std::size_t t = from; t < to; ++t) g.frames[t].push_back(e);
}

// Minimum total cost over all injective assignments of the smaller side.
double brute_force_cost(const std::vector<double>& cost, std::size_t rows, std::size_t cols) {
  const bool tr = rows > cols;
  const std::size_t n = tr ? cols : rows, m = tr ? rows : cols;
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += tr ? cost[idx[i] * cols + i] : cost[i * cols + idx[i]];
    best = std::min(best, s);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return best;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("angular distance") {
  CHECK(seld::angular_distance(30.0, 20.0, 30.0, 20.0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(seld::angular_distance(0.0, 0.0, -180.0, 0.0) == doctest::Approx(180.0));
  CHECK(seld::angular_distance(10.0, 0.0, 30.0, 0.0) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(seld::angular_distance(0.0, 90.0, 123.0, 90.0) == doctest::Approx(0.0).epsilon(1e-6));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> az(-180.0, 180.0), el(-90.0, 90.0);
  for (int i = 0; i < 1000; ++i) {
    const double a1 = az(rng), e1 = el(rng), a2 = az(rng), e2 = el(rng), a3 = az(rng), e3 = el(rng);
    const double ab = seld::angular_distance(a1, e1, a2, e2);
    CHECK(ab == doctest::Approx(seld::angular_distance(a2, e2, a1, e1)).epsilon(1e-12));
    CHECK(ab >= 0.0);
    CHECK(ab <= 180.0);
    CHECK(ab <= seld::angular_distance(a1, e1, a3, e3) + seld::angular_distance(a3, e3, a2, e2) + 1e-9);
  }
}

TEST_CASE("assignment solver matches exhaustive search") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 180.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t rows = 1 + trial % 4, cols = 1 + (trial / 4) % 4;
    std::vector<double> cost(rows * cols);
    for (auto& c : cost) c = u(rng);
    const auto match = seld::solve_assignment(cost, rows, cols);
    double total = 0.0;
    std::vector<bool> used(cols, false);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < rows; ++i) {
      if (match[i] < 0) continue;
      const auto j = static_cast<std::size_t>(match[i]);
      CHECK_FALSE(used[j]);
      used[j] = true;
      total += cost[i * cols + j];
      ++assigned;
    }
    CHECK(assigned == std::min(rows, cols));
    CHECK(total == doctest::Approx(brute_force_cost(cost, rows, cols)).epsilon(1e-12));
  }
}

TEST_CASE("seld error aggregation") {
  CHECK(seld::seld_error(0.409, 0.707, 12.3, 0.716) == doctest::Approx(0.264).epsilon(0.001 / 0.264));
  CHECK(seld::seld_error(0.660, 0.455, 21.1, 0.521) == doctest::Approx(0.450).epsilon(0.001 / 0.450));
  CHECK(seld::seld_error(0.0, 1.0, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(seld::seld_error(0.5, 1.5, 10.0, 0.5), seld::Error);
  CHECK_THROWS_AS(seld::seld_error(0.5, 0.5, 181.0, 0.5), seld::Error);
  CHECK_THROWS_AS(seld::seld_error(-0.1, 0.5, 10.0, 0.5), seld::Error);
  CHECK_THROWS_AS(seld::seld_error(0.5, 0.5, 10.0, -0.5), seld::Error);
}

TEST_CASE("perfect prediction") {
  auto ref = grid(35);
  fill(ref, 0, 20, {1, 0, 30.0, 10.0});
  fill(ref, 5, 35, {4, 0, -150.0, -40.0});
  fill(ref, 12, 18, {4, 1, 60.0, 0.0});
  const auto r = seld::evaluate(ref, ref);
  CHECK(r.er20 == doctest::Approx(0.0));
  CHECK(r.f20 == doctest::Approx(1.0));
  CHECK(r.le_cd == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.lr_cd == doctest::Approx(1.0));
  CHECK(r.e_seld == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(r.counts.fn == 0);
  CHECK(r.counts.fp == 0);
}

TEST_CASE("empty prediction") {
  auto ref = grid(30);
  fill(ref, 0, 30, {2, 0, 0.0, 0.0});
  fill(ref, 10, 15, {3, 0, 90.0, 0.0});
  const auto r = seld::evaluate(grid(30), ref);
  CHECK(r.er20 == doctest::Approx(1.0));
  CHECK(r.f20 == 0.0);
  CHECK(r.lr_cd == 0.0);
  CHECK(r.le_cd == 180.0);
  CHECK(r.counts.deletions == r.counts.num_ref);
  CHECK(r.e_seld == doctest::Approx(0.25 * (1.0 + 1.0 + 1.0 + 1.0)));
}

TEST_CASE("hand-worked two-segment scenario") {
  // Segment 0: class 0 reference at (0, 0) predicted at (15, 0); class 1
  // predicted with no reference. Segment 1: class 2 reference never predicted.
  auto ref = grid(20, 3), pred = grid(20, 3);
  fill(ref, 0, 10, {0, 0, 0.0, 0.0});
  fill(pred, 0, 10, {0, 0, 15.0, 0.0});
  fill(pred, 2, 6, {1, 0, 90.0, 0.0});
  fill(ref, 10, 20, {2, 0, -45.0, 10.0});
  const auto r = seld::evaluate(pred, ref);
  const auto& c = r.counts;
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.fp_spatial == 0);
  CHECK(c.substitutions == 0);
  CHECK(c.deletions == 1);
  CHECK(c.insertions == 1);
  CHECK(c.num_ref == 2);
  CHECK(r.er20 == doctest::Approx(1.0));
  CHECK(r.f20 == doctest::Approx(0.5));
  CHECK(r.le_cd == doctest::Approx(15.0));
  CHECK(r.lr_cd == doctest::Approx(0.5));
  CHECK(r.e_seld == doctest::Approx((1.0 + 0.5 + 15.0 / 180.0 + 0.5) / 4.0));
}

TEST_CASE("same-class sources are matched optimally, far matches are spatial errors") {
  auto ref = grid(10), pred = grid(10);
  for (std::size_t t = 0; t < 10; ++t) {
    ref.frames[t] = {{0, 0, 0.0, 0.0}, {0, 1, 60.0, 0.0}, {0, 2, 120.0, 0.0}};
    pred.frames[t] = {{0, 0, 125.0, 0.0}, {0, 1, 5.0, 0.0}, {0, 2, 58.0, 0.0}};
  }
  auto r = seld::evaluate(pred, ref);
  CHECK(r.counts.tp == 3);
  CHECK(r.counts.fp_spatial == 0);
  CHECK(r.le_cd == doctest::Approx(4.0));

  // Move one prediction 40 degrees away: a substitution, not a miss.
  for (auto& f : pred.frames) f[1].azimuth = 40.0;
  r = seld::evaluate(pred, ref);
  CHECK(r.counts.tp == 2);
  CHECK(r.counts.fp_spatial == 1);
  CHECK(r.counts.substitutions == 0);
  CHECK(r.counts.insertions == 1);
  CHECK(r.lr_cd == doctest::Approx(1.0));
  CHECK(r.le_cd == doctest::Approx((5.0 + 2.0 + 40.0) / 3.0));
}

TEST_CASE("class relabelling leaves the metrics unchanged") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cls(0, 11);
  std::uniform_real_distribution<double> az(-180.0, 179.0), el(-60.0, 60.0), jitter(-25.0, 25.0);
  auto ref = grid(40), pred = grid(40);
  for (std::size_t t = 0; t < 40; ++t) {
    for (int k = 0; k < 2; ++k) {
      const SeldEvent e{cls(rng), k, az(rng), el(rng)};
      if (rng() % 4 != 0) ref.frames[t].push_back(e);
      if (rng() % 3 != 0) {
        SeldEvent p = e;
        p.azimuth = seld::wrap_azimuth(e.azimuth + jitter(rng));
        if (rng() % 5 == 0) p.class_id = cls(rng);
        pred.frames[t].push_back(p);
      }
    }
  }
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto relabel = [&](SeldEventGrid g) {
    for (auto& f : g.frames) {
      for (auto& e : f) e.class_id = perm[static_cast<std::size_t>(e.class_id)];
    }
    return g;
  };
  const auto a = seld::evaluate(pred, ref);
  const auto b = seld::evaluate(relabel(pred), relabel(ref));
  CHECK(a.er20 == doctest::Approx(b.er20));
  CHECK(a.f20 == doctest::Approx(b.f20));
  CHECK(a.le_cd == doctest::Approx(b.le_cd));
  CHECK(a.lr_cd == doctest::Approx(b.lr_cd));
  CHECK(a.e_seld == doctest::Approx(seld::seld_error(a.er20, a.f20, a.le_cd, a.lr_cd)).epsilon(1e-9));
}

TEST_CASE("evaluate rejects mismatched grids") {
  CHECK_THROWS_AS(seld::evaluate(grid(10), grid(11)), seld::Error);
  CHECK_THROWS_AS(seld::evaluate(grid(10, 12), grid(10, 13)), seld::Error);
}

}  // TEST_SUITE
