#pragma once

// 1-D periodic pseudo-spectral kernel: radix-2 FFT, spectral derivatives and
// Fourier-space grid transfer between power-of-two grids.
//
// Fourier convention: hat_j = sum_l u_l exp(-2 pi i j l / n) (unnormalized),
// the inverse carries the 1/n factor. Index j holds the integer wavenumber
// w_j = j for j <= n/2 and j - n otherwise.

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pint/errors.hpp"

namespace pint {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

constexpr bool is_power_of_two(std::size_t n) noexcept {
  return n >= 1 && (n & (n - 1)) == 0;
}

/// Integer wavenumber stored at Fourier index j of an n-point transform.
constexpr long integer_wavenumber(std::size_t j, std::size_t n) noexcept {
  return j <= n / 2 ? static_cast<long>(j)
                    : static_cast<long>(j) - static_cast<long>(n);
}

inline double wavenumber(std::size_t j, std::size_t n, double length) {
  return 2.0 * std::numbers::pi * static_cast<double>(integer_wavenumber(j, n)) /
         length;
}

inline std::vector<double> wavenumbers(std::size_t n, double length) {
  std::vector<double> k(n);
  for (std::size_t j = 0; j < n; ++j) k[j] = wavenumber(j, n, length);
  return k;
}

/// Precomputed twiddles and bit-reversal permutation for one transform size.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n), bitrev_(n), twiddle_(n / 2) {
    if (!is_power_of_two(n) || n < 2)
      throw InvalidSize("FFT size must be a power of two >= 2, got " +
                        std::to_string(n));
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      bitrev_[i] = r;
    }
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                           static_cast<double>(n);
      twiddle_[k] = {std::cos(angle), std::sin(angle)};
    }
  }

  std::size_t size() const noexcept { return n_; }

  void forward(std::span<cplx> data) const { transform(data, false); }

  /// Inverse transform including the 1/n normalization.
  void inverse(std::span<cplx> data) const {
    transform(data, true);
    const double scale = 1.0 / static_cast<double>(n_);
    for (auto& v : data) v *= scale;
  }

 private:
  void transform(std::span<cplx> data, bool inverse) const {
    if (data.size() != n_) throw InvalidSize("FFT input size mismatch");
    for (std::size_t i = 0; i < n_; ++i)
      if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      const std::size_t half = len / 2;
      const std::size_t stride = n_ / len;
      for (std::size_t start = 0; start < n_; start += len) {
        for (std::size_t k = 0; k < half; ++k) {
          cplx w = twiddle_[k * stride];
          if (inverse) w = std::conj(w);
          const cplx a = data[start + k];
          const cplx b = data[start + k + half] * w;
          data[start + k] = a + b;
          data[start + k + half] = a - b;
        }
      }
    }
  }

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<cplx> twiddle_;
};

/// Per-thread plan cache; plans are immutable once built.
inline const FftPlan& fft_plan(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, std::make_unique<FftPlan>(n)).first;
  return *it->second;
}

inline CVec fft(CVec v) {
  fft_plan(v.size()).forward(v);
  return v;
}

inline CVec ifft(CVec v) {
  fft_plan(v.size()).inverse(v);
  return v;
}

/// Multiply Fourier coefficients by (i k)^order. Odd orders zero the Nyquist
/// mode so that real data stays real.
inline CVec differentiate_hat(const CVec& hat, double length, int order) {
  const std::size_t n = hat.size();
  CVec out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx ik{0.0, wavenumber(j, n, length)};
    cplx factor{1.0, 0.0};
    for (int o = 0; o < order; ++o) factor *= ik;
    out[j] = hat[j] * factor;
  }
  if (order % 2 == 1 && n % 2 == 0) out[n / 2] = 0.0;
  return out;
}

/// Move Fourier coefficients between grids of different size, preserving the
/// physical values of band-limited functions. Modes with |w| < min(n)/2 are
/// copied; the Nyquist mode of the smaller grid is split evenly onto +-n/2 of
/// the larger grid when refining and folded back when coarsening, so that
/// coarsening after refining is the identity.
inline CVec resample_hat(const CVec& hat, std::size_t n_to) {
  const std::size_t n_from = hat.size();
  if (!is_power_of_two(n_to) || n_to < 2)
    throw InvalidTransfer("target grid size must be a power of two >= 2");
  if (n_to == n_from) return hat;
  const double scale = static_cast<double>(n_to) / static_cast<double>(n_from);
  CVec out(n_to, cplx{0.0, 0.0});
  const std::size_t n_small = std::min(n_from, n_to);
  const std::size_t half = n_small / 2;
  for (std::size_t w = 0; w < half; ++w) out[w] = hat[w] * scale;
  for (std::size_t w = 1; w < half; ++w)
    out[n_to - w] = hat[n_from - w] * scale;
  if (n_to > n_from) {
    // refine: split the coarse Nyquist coefficient
    const cplx nyq = hat[half] * scale * 0.5;
    out[half] = nyq;
    out[n_to - half] = nyq;
  } else {
    // coarsen: fold +-n_to/2 into the coarse Nyquist slot
    out[half] = (hat[half] + hat[n_from - half]) * scale;
  }
  return out;
}

/// Periodic grid function on [0, length) with physical and/or Fourier values.
class SpectralField {
 public:
  static SpectralField from_physical(double length, CVec values) {
    check(values.size(), length);
    SpectralField f(length, values.size());
    f.phys_ = std::move(values);
    return f;
  }

  static SpectralField from_fourier(double length, CVec hat) {
    check(hat.size(), length);
    SpectralField f(length, hat.size());
    f.hat_ = std::move(hat);
    return f;
  }

  std::size_t size() const noexcept { return n_; }
  double length() const noexcept { return length_; }
  double dx() const noexcept { return length_ / static_cast<double>(n_); }
  double x(std::size_t j) const noexcept {
    return static_cast<double>(j) * dx();
  }

  bool has_physical() const noexcept { return phys_.has_value(); }
  bool has_fourier() const noexcept { return hat_.has_value(); }

  const CVec& physical() const {
    if (!phys_) throw RepresentationError("physical values not valid");
    return *phys_;
  }
  const CVec& fourier() const {
    if (!hat_) throw RepresentationError("Fourier coefficients not valid");
    return *hat_;
  }

  /// Physical values, transforming on the fly if only Fourier data is held.
  CVec physical_values() const { return phys_ ? *phys_ : ifft(*hat_); }
  CVec fourier_values() const { return hat_ ? *hat_ : fft(*phys_); }

 private:
  SpectralField(double length, std::size_t n) : n_(n), length_(length) {}

  static void check(std::size_t n, double length) {
    if (!is_power_of_two(n) || n < 2)
      throw InvalidSize("grid size must be a power of two >= 2, got " +
                        std::to_string(n));
    if (!(length > 0.0)) throw InvalidSize("domain length must be positive");
  }

  std::size_t n_;
  double length_;
  std::optional<CVec> phys_;
  std::optional<CVec> hat_;

  friend SpectralField dft_forward(const SpectralField&);
  friend SpectralField dft_inverse(const SpectralField&);
};

/// Returns a field with both representations valid.
inline SpectralField dft_forward(const SpectralField& field) {
  SpectralField out = field;
  out.hat_ = fft(field.physical());
  return out;
}

inline SpectralField dft_inverse(const SpectralField& field) {
  SpectralField out = field;
  out.phys_ = ifft(field.fourier());
  return out;
}

inline SpectralField spectral_derivative(const SpectralField& field,
                                         int order) {
  if (order < 1) throw std::invalid_argument("derivative order must be >= 1");
  return SpectralField::from_fourier(
      field.length(),
      differentiate_hat(field.fourier_values(), field.length(), order));
}

inline SpectralField restrict_to(const SpectralField& field,
                                 std::size_t n_coarse) {
  if (n_coarse > field.size() || !is_power_of_two(n_coarse) || n_coarse < 2)
    throw InvalidTransfer("cannot restrict grid of size " +
                          std::to_string(field.size()) + " to " +
                          std::to_string(n_coarse));
  return SpectralField::from_fourier(
      field.length(), resample_hat(field.fourier_values(), n_coarse));
}

inline SpectralField interpolate_to(const SpectralField& field,
                                    std::size_t n_fine) {
  if (n_fine < field.size() || !is_power_of_two(n_fine))
    throw InvalidTransfer("cannot interpolate grid of size " +
                          std::to_string(field.size()) + " to " +
                          std::to_string(n_fine));
  return SpectralField::from_fourier(
      field.length(), resample_hat(field.fourier_values(), n_fine));
}

/// Grid pair of a two-level space hierarchy.
struct GridPair {
  std::size_t fine;
  std::size_t coarse;

  GridPair(std::size_t fine_n, std::size_t coarse_n)
      : fine(fine_n), coarse(coarse_n) {
    if (!is_power_of_two(fine) || !is_power_of_two(coarse) || coarse > fine)
      throw InvalidTransfer("grid pair needs powers of two with coarse <= fine");
  }
};

/// Max-norm; NaN entries make the result NaN instead of being skipped.
inline double max_abs(std::span<const cplx> v) {
  double m = 0.0;
  for (const auto& x : v) {
    const double a = std::abs(x);
    if (std::isnan(a)) return a;
    m = std::max(m, a);
  }
  return m;
}

/// Max-norm of a function given by its Fourier coefficients.
inline double max_norm_of_hat(const CVec& hat) { return max_abs(ifft(hat)); }

}  // namespace pint
