#include "seld/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "seld/error.hpp"

namespace seld {

SmallMatrix::SmallMatrix(std::size_t n) : n_(n) {
  require(n >= 1 && n <= kMaxChannels, ErrorCode::kInvalidArgument,
          "matrix order must be in [1, 8]");
}

SmallMatrix SmallMatrix::identity(std::size_t n) {
  SmallMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

SmallMatrix SmallMatrix::outer(std::span<const cdouble> v) {
  SmallMatrix m(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = v[i] * std::conj(v[j]);
  }
  return m;
}

double SmallMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i).real();
  return t;
}

double SmallMatrix::frobenius() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) s += std::norm((*this)(i, j));
  }
  return std::sqrt(s);
}

double SmallMatrix::hermitian_defect() const {
  double d = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i; j < n_; ++j) {
      d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    }
  }
  return d;
}

namespace detail {

int jacobi_eigen(std::size_t n, cdouble* a, double* values, cdouble* v) {
  constexpr std::size_t S = kMaxChannels;
  constexpr int kMaxSweeps = 50;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) v[i * S + j] = (i == j) ? 1.0 : 0.0;
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) scale += std::norm(a[i * S + j]);
  }
  scale = std::sqrt(scale);

  int sweep = 0;
  if (scale > 0.0) {
    const double stop = 1e-15 * scale;
    for (; sweep < kMaxSweeps; ++sweep) {
      double off = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a[p * S + q]);
      }
      if (std::sqrt(off) <= stop) break;

      for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          const cdouble apq = a[p * S + q];
          const double r = std::abs(apq);
          if (r <= 1e-300) continue;
          // Phase the (p,q) entry real, then apply a real symmetric rotation.
          const cdouble phase = std::conj(apq / r);
          const double app = a[p * S + p].real();
          const double aqq = a[q * S + q].real();
          const double theta = (aqq - app) / (2.0 * r);
          double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          const cdouble jpp = c, jpq = s, jqp = -s * phase, jqq = c * phase;

          for (std::size_t k = 0; k < n; ++k) {
            const cdouble akp = a[k * S + p], akq = a[k * S + q];
            a[k * S + p] = akp * jpp + akq * jqp;
            a[k * S + q] = akp * jpq + akq * jqq;
          }
          for (std::size_t k = 0; k < n; ++k) {
            const cdouble apk = a[p * S + k], aqk = a[q * S + k];
            a[p * S + k] = std::conj(jpp) * apk + std::conj(jqp) * aqk;
            a[q * S + k] = std::conj(jpq) * apk + std::conj(jqq) * aqk;
          }
          a[p * S + q] = 0.0;
          a[q * S + p] = 0.0;
          a[p * S + p] = a[p * S + p].real();
          a[q * S + q] = a[q * S + q].real();
          for (std::size_t k = 0; k < n; ++k) {
            const cdouble vkp = v[k * S + p], vkq = v[k * S + q];
            v[k * S + p] = vkp * jpp + vkq * jqp;
            v[k * S + q] = vkp * jpq + vkq * jqq;
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) values[i] = a[i * S + i].real();
  return sweep;
}

}  // namespace detail

namespace {

void check_hermitian(const SmallMatrix& r) {
  const double defect = r.hermitian_defect();
  if (defect > 1e-6 * std::max(r.frobenius(), 1e-300)) {
    fail(ErrorCode::kNotHermitian,
         "eigen: Hermitian defect " + std::to_string(defect));
  }
}

}  // namespace

HermitianEigen hermitian_eigen(const SmallMatrix& r) {
  check_hermitian(r);
  const std::size_t n = r.order();
  SmallMatrix work = r;
  std::array<double, kMaxChannels> values{};
  std::array<cdouble, kMaxChannels * kMaxChannels> v{};
  detail::jacobi_eigen(n, work.data(), values.data(), v.data());

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] > values[y]; });
  HermitianEigen out;
  for (const std::size_t j : order) {
    out.values.push_back(values[j]);
    std::vector<cdouble> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v[i * kMaxChannels + j];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

EigPair principal_eigenvector(const SmallMatrix& r) {
  auto eig = hermitian_eigen(r);
  return {eig.values.front(), std::move(eig.vectors.front())};
}

double coherence(const SmallMatrix& r) {
  const double tr = r.trace();
  require(tr > 0.0, ErrorCode::kInvalidArgument, "coherence: zero trace");
  return principal_eigenvector(r).value / tr;
}

ScmField estimate_scm(const ComplexSpectrogram& spec, std::size_t time_radius,
                      std::size_t freq_radius, const ScmWindow& window,
                      const ExecPolicy& exec) {
  const std::size_t channels = spec.num_channels();
  require(channels >= 2, ErrorCode::kInvalidArgument,
          "estimate_scm: need at least two channels");
  require(channels <= kMaxChannels, ErrorCode::kInvalidArgument,
          "estimate_scm: at most 8 channels supported");
  const std::size_t frames = spec.num_frames(), bins = spec.num_bins();
  const std::size_t t0 = std::min(window.frame_begin, frames);
  const std::size_t t1 = std::min(window.frame_end, frames);
  const std::size_t f0 = std::min(window.bin_begin, bins);
  const std::size_t f1 = std::min(window.bin_end, bins);
  require(t0 <= t1 && f0 <= f1, ErrorCode::kInvalidArgument,
          "estimate_scm: inverted window");

  ScmField field;
  field.channels = channels;
  field.frame_begin = t0;
  field.num_frames = t1 - t0;
  field.bin_begin = f0;
  field.num_bins = f1 - f0;
  field.time_radius = time_radius;
  field.freq_radius = freq_radius;
  field.scms.assign(field.num_frames * field.num_bins, SmallMatrix(channels));
  field.power.assign(field.num_frames * field.num_bins, 0.0);

  const auto& x = spec.data;
  parallel_for(field.num_frames, exec, [&](std::size_t begin, std::size_t end) {
    std::array<cdouble, kMaxChannels> col{};
    for (std::size_t lt = begin; lt < end; ++lt) {
      const std::size_t t = t0 + lt;
      const std::size_t ta = t >= time_radius ? t - time_radius : 0;
      const std::size_t tb = std::min(frames, t + time_radius + 1);
      for (std::size_t lf = 0; lf < field.num_bins; ++lf) {
        const std::size_t f = f0 + lf;
        const std::size_t fa = f >= freq_radius ? f - freq_radius : 0;
        const std::size_t fb = std::min(bins, f + freq_radius + 1);
        SmallMatrix& r = field.scms[lt * field.num_bins + lf];
        for (std::size_t tt = ta; tt < tb; ++tt) {
          for (std::size_t ff = fa; ff < fb; ++ff) {
            for (std::size_t i = 0; i < channels; ++i) col[i] = x(i, tt, ff);
            for (std::size_t i = 0; i < channels; ++i) {
              for (std::size_t j = i; j < channels; ++j) {
                r(i, j) += col[i] * std::conj(col[j]);
              }
            }
          }
        }
        const double inv = 1.0 / static_cast<double>((tb - ta) * (fb - fa));
        double p = 0.0;
        for (std::size_t i = 0; i < channels; ++i) {
          r(i, i) = r(i, i).real() * inv;
          for (std::size_t j = i + 1; j < channels; ++j) {
            r(i, j) *= inv;
            r(j, i) = std::conj(r(i, j));
          }
          p += std::norm(x(i, t, f));
        }
        field.power[lt * field.num_bins + lf] = p / static_cast<double>(channels);
      }
    }
  });
  return field;
}

}  // namespace seld
