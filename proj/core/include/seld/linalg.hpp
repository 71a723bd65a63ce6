#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "seld/dsp.hpp"
#include "seld/parallel.hpp"

namespace seld {

inline constexpr std::size_t kMaxChannels = 8;

using cdouble = std::complex<double>;

// Square complex matrix of order n <= kMaxChannels, stored row-major inline.
class SmallMatrix {
 public:
  SmallMatrix() = default;
  explicit SmallMatrix(std::size_t n);

  static SmallMatrix identity(std::size_t n);
  static SmallMatrix outer(std::span<const cdouble> v);  // v v^H

  std::size_t order() const { return n_; }
  cdouble& operator()(std::size_t i, std::size_t j) { return a_[i * kMaxChannels + j]; }
  const cdouble& operator()(std::size_t i, std::size_t j) const {
    return a_[i * kMaxChannels + j];
  }

  cdouble* data() { return a_.data(); }
  const cdouble* data() const { return a_.data(); }

  double trace() const;
  double frobenius() const;
  // max |a_ij - conj(a_ji)|
  double hermitian_defect() const;

 private:
  std::size_t n_ = 0;
  std::array<cdouble, kMaxChannels * kMaxChannels> a_{};
};

struct EigPair {
  double value = 0.0;
  std::vector<cdouble> vector;  // unit norm, arbitrary global phase
};

// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
// rotations. Eigenvalues are returned in descending order; column j of
// `vectors` (stored as vectors[j]) pairs with values[j].
struct HermitianEigen {
  std::vector<double> values;
  std::vector<std::vector<cdouble>> vectors;
};
HermitianEigen hermitian_eigen(const SmallMatrix& r);

// Largest eigenvalue and its eigenvector. Throws kNotHermitian when
// hermitian_defect() exceeds 1e-6 of the Frobenius norm.
EigPair principal_eigenvector(const SmallMatrix& r);

// lambda_1 / trace(R), in [1/M, 1] for a PSD matrix.
double coherence(const SmallMatrix& r);

// Per-bin spatial covariance matrices over a window of frames/bins of a
// spectrogram, each the mean of X X^H over the clipped
// (2 time_radius + 1) x (2 freq_radius + 1) neighbourhood.
struct ScmField {
  std::size_t channels = 0;
  std::size_t frame_begin = 0;  // absolute frame index of local frame 0
  std::size_t num_frames = 0;
  std::size_t bin_begin = 0;    // absolute bin index of local bin 0
  std::size_t num_bins = 0;
  std::size_t time_radius = 0;
  std::size_t freq_radius = 0;
  std::vector<SmallMatrix> scms;  // num_frames x num_bins
  // Mean over channels of |X(t,f)|^2 at the centre bin, same layout.
  std::vector<double> power;

  const SmallMatrix& at(std::size_t t, std::size_t f) const {
    return scms[t * num_bins + f];
  }
  double power_at(std::size_t t, std::size_t f) const {
    return power[t * num_bins + f];
  }
};

struct ScmWindow {
  std::size_t frame_begin = 0;
  std::size_t frame_end = static_cast<std::size_t>(-1);  // clipped to T
  std::size_t bin_begin = 0;
  std::size_t bin_end = static_cast<std::size_t>(-1);    // clipped to F
};

// Averaging neighbourhoods reach outside the window when they fit inside the
// spectrogram, so a field computed in blocks equals the whole-clip field.
ScmField estimate_scm(const ComplexSpectrogram& spec, std::size_t time_radius,
                      std::size_t freq_radius, const ScmWindow& window = {},
                      const ExecPolicy& exec = {});

namespace detail {

// Allocation-free kernel used on hot paths. `a` is row-major with stride
// kMaxChannels and is overwritten. Returns the number of sweeps performed.
// values are unsorted; eigenvector j is the column v[row * kMaxChannels + j].
int jacobi_eigen(std::size_t n, cdouble* a, double* values, cdouble* v);

}  // namespace detail

}  // namespace seld
