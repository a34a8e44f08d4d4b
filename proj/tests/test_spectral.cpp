#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "pint/spectral.hpp"

using namespace pint;

namespace {

constexpr double kPi = std::numbers::pi;

CVec random_vector(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  CVec v(n);
  for (auto& x : v) x = {d(gen), d(gen)};
  return v;
}

CVec direct_dft(const CVec& v, int sign) {
  const std::size_t n = v.size();
  CVec out(n);
  for (std::size_t j = 0; j < n; ++j) {
    cplx s{0.0, 0.0};
    for (std::size_t l = 0; l < n; ++l) {
      const double arg = sign * 2.0 * kPi * static_cast<double>(j * l % n) / n;
      s += v[l] * cplx{std::cos(arg), std::sin(arg)};
    }
    out[j] = s;
  }
  return out;
}

double rel_diff(const CVec& a, const CVec& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num = std::max(num, std::abs(a[j] - b[j]));
    den = std::max(den, std::abs(b[j]));
  }
  return num / den;
}

CVec sample(std::size_t n, double length, auto f) {
  CVec v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = f(length * static_cast<double>(j) / n);
  return v;
}

}  // namespace

TEST_CASE("delta transforms to a flat spectrum", "[spectral]") {
  const auto hat = fft({1.0, 0.0, 0.0, 0.0});
  for (const auto& h : hat) CHECK(std::abs(h - cplx{1.0, 0.0}) < 1e-15);
}

TEST_CASE("constant field has only a mean mode", "[spectral]") {
  const auto hat = fft(CVec(8, cplx{2.5, 0.0}));
  CHECK(std::abs(hat[0] - cplx{20.0, 0.0}) < 1e-13);
  for (std::size_t j = 1; j < 8; ++j) CHECK(std::abs(hat[j]) < 1e-13);
  const auto back = ifft([] { CVec h(8); h[0] = 8.0; return h; }());
  for (const auto& u : back) CHECK(std::abs(u - cplx{1.0, 0.0}) < 1e-15);
}

TEST_CASE("FFT matches direct summation for every size up to 256", "[spectral]") {
  for (std::size_t n = 2; n <= 256; n *= 2) {
    const CVec v = random_vector(n, static_cast<unsigned>(n));
    CHECK(rel_diff(fft(v), direct_dft(v, -1)) < 1e-12);
    CVec inv = direct_dft(v, +1);
    for (auto& x : inv) x /= static_cast<double>(n);
    CHECK(rel_diff(ifft(v), inv) < 1e-12);
  }
}

TEST_CASE("round trip and Parseval", "[spectral]") {
  const CVec v = random_vector(128, 7);
  CHECK(rel_diff(ifft(fft(v)), v) < 1e-12);
  const CVec h = fft(v);
  double e_phys = 0.0, e_hat = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    e_phys += std::norm(v[j]);
    e_hat += std::norm(h[j]);
  }
  CHECK(std::abs(e_hat / 128.0 - e_phys) < 1e-11 * e_phys);
}

TEST_CASE("field representations", "[spectral]") {
  const auto f = SpectralField::from_physical(2.0 * kPi, random_vector(16, 3));
  CHECK(f.has_physical());
  CHECK_FALSE(f.has_fourier());
  CHECK_THROWS_AS(f.fourier(), RepresentationError);
  const auto g = dft_forward(f);
  CHECK(g.has_fourier());
  CHECK(rel_diff(dft_inverse(SpectralField::from_fourier(g.length(), g.fourier())).physical(),
                 f.physical()) < 1e-13);
  CHECK_THROWS_AS(SpectralField::from_physical(1.0, CVec(12)), InvalidSize);
  CHECK_THROWS_AS(SpectralField::from_physical(0.0, CVec(8)), InvalidSize);
}

TEST_CASE("derivatives of trigonometric functions are exact", "[spectral]") {
  const double L = 2.0 * kPi;
  const auto u = SpectralField::from_physical(L, sample(32, L, [](double x) {
                                                 return cplx{std::sin(x), 0.0};
                                               }));
  const CVec d1 = spectral_derivative(u, 1).physical_values();
  const CVec d2 = spectral_derivative(u, 2).physical_values();
  for (std::size_t j = 0; j < 32; ++j) {
    CHECK(std::abs(d1[j] - std::cos(u.x(j))) < 1e-12);
    CHECK(std::abs(d2[j] + std::sin(u.x(j))) < 1e-12);
  }
  CHECK_THROWS(spectral_derivative(u, 0));
}

TEST_CASE("derivative of the ADR bump matches fine finite differences", "[spectral]") {
  const double L = 2.0 * kPi;
  auto f = [](double x) {
    const double s = x - kPi;
    return 1.0 - 0.55 * (1.0 - std::exp(-(s * s * s * s) / 0.02));
  };
  const std::size_t n = 128;
  const auto u = SpectralField::from_physical(L, sample(n, L, [&](double x) {
                                                return cplx{f(x), 0.0};
                                              }));
  const CVec du = spectral_derivative(u, 1).physical_values();
  // eighth-order central differences on a 64x finer grid
  const double h = L / 8192.0;
  const double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  double err = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = u.x(j);
    double d = 0.0;
    for (int k = 1; k <= 4; ++k) d += c[k - 1] * (f(x + k * h) - f(x - k * h));
    err = std::max(err, std::abs(du[j].real() - d / h));
  }
  CHECK(err < 1e-6);
}

TEST_CASE("grid transfer", "[spectral]") {
  const double L = 2.0 * kPi;
  const auto u = SpectralField::from_physical(L, random_vector(32, 11));
  const auto back = restrict_to(interpolate_to(u, 64), 32);
  CHECK(rel_diff(back.physical_values(), u.physical()) < 1e-13);

  const auto c = SpectralField::from_physical(L, CVec(64, cplx{3.0, 0.0}));
  for (const auto& v : restrict_to(c, 4).physical_values())
    CHECK(std::abs(v - cplx{3.0, 0.0}) < 1e-13);

  const auto s3 = SpectralField::from_physical(L, sample(64, L, [](double x) {
                                                 return cplx{std::sin(3.0 * x), 0.0};
                                               }));
  const auto r = restrict_to(s3, 8);
  const CVec rv = r.physical_values();
  for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(rv[j] - std::sin(3.0 * r.x(j))) < 1e-12);

  CHECK_THROWS_AS(restrict_to(u, 64), InvalidTransfer);
  CHECK_THROWS_AS(interpolate_to(u, 16), InvalidTransfer);
  CHECK_THROWS_AS(GridPair(8, 16), InvalidTransfer);
}

TEST_CASE("max norm propagates NaN", "[spectral]") {
  CVec v{1.0, std::numeric_limits<double>::quiet_NaN(), 2.0};
  CHECK(std::isnan(max_abs(v)));
  CHECK(max_abs(CVec{1.0, -3.0, 2.0}) == 3.0);
}
