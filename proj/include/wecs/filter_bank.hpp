#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wecs/error.hpp"

namespace wecs {

enum class Basis { haar, db2, db4, sym2, sym4, sym8, coif4 };

inline constexpr std::array<Basis, 7> kAllBases = {Basis::haar, Basis::db2,  Basis::db4,
                                                   Basis::sym2, Basis::sym4, Basis::sym8,
                                                   Basis::coif4};

inline std::string_view basis_name(Basis b) {
  switch (b) {
    case Basis::haar: return "haar";
    case Basis::db2: return "db2";
    case Basis::db4: return "db4";
    case Basis::sym2: return "sym2";
    case Basis::sym4: return "sym4";
    case Basis::sym8: return "sym8";
    case Basis::coif4: return "coif4";
  }
  return "?";
}

inline std::string supported_bases_list() {
  std::string s;
  for (Basis b : kAllBases) {
    if (!s.empty()) s += ", ";
    s += basis_name(b);
  }
  return s;
}

inline Basis parse_basis(std::string_view name) {
  for (Basis b : kAllBases)
    if (basis_name(b) == name) return b;
  fail(ErrorCategory::invalid_argument,
       "unknown wavelet basis '" + std::string(name) + "'; supported: " + supported_bases_list());
}

namespace detail {

// Orthonormal scaling filters h, in the order they are applied by correlation.
inline constexpr double kHaar[] = {0.7071067811865476, 0.7071067811865476};

inline constexpr double kDb2[] = {0.48296291314453416, 0.8365163037378079, 0.2241438680420134,
                                  -0.12940952255126037};

inline constexpr double kDb4[] = {0.2303778133088965,   0.7148465705529157,
                                  0.6308807679298589,   -0.027983769416859854,
                                  -0.18703481171909309, 0.030841381835560764,
                                  0.0328830116668852,   -0.010597401785069032};

// Same filter as db2.
inline constexpr double kSym2[] = {0.48296291314453416, 0.8365163037378079, 0.2241438680420134,
                                   -0.12940952255126037};

inline constexpr double kSym4[] = {0.0322231006040427,   -0.012603967262037833,
                                   -0.09921954357684722, 0.29785779560527736,
                                   0.8037387518059161,   0.49761866763201545,
                                   -0.02963552764599851, -0.07576571478927333};

inline constexpr double kSym8[] = {
    0.0018899503327594609, -0.0003029205147213668, -0.01495225833704823,
    0.003808752013890615,  0.049137179673607506,   -0.027219029917056003,
    -0.05194583810770904,  0.3644418948353314,     0.7771857517005235,
    0.4813596512583722,    -0.061273359067658524,  -0.1432942383508097,
    0.007607487324917605,  0.03169508781149298,    -0.0005421323317911481,
    -0.0033824159510061256};

inline constexpr double kCoif4[] = {
    0.000892313902537003,   -0.001629492425226786,  -0.007346167936268051,
    0.01606894713157503,    0.02668230466960483,    -0.08126671024919373,
    -0.05607731960356926,   0.41530842700068227,    0.7822389344242826,
    0.43438603311435653,    -0.06662747236681717,   -0.09622042453595264,
    0.03933442260558915,    0.02508225333794961,    -0.015211728187697211,
    -0.0056582838001308835, 0.0037514346971460866,  0.0012665610789256603,
    -0.0005890202246332165, -0.0002599743371222568, 6.233885431278719e-05,
    3.1229861599195265e-05, -3.259647940030751e-06, -1.7849909144933469e-06};

inline std::span<const double> scaling_filter(Basis b) {
  switch (b) {
    case Basis::haar: return kHaar;
    case Basis::db2: return kDb2;
    case Basis::db4: return kDb4;
    case Basis::sym2: return kSym2;
    case Basis::sym4: return kSym4;
    case Basis::sym8: return kSym8;
    case Basis::coif4: return kCoif4;
  }
  return {};
}

}  // namespace detail

// Largest deviation from the orthonormal QMF conditions: sum(h) = sqrt(2),
// sum(h^2) = 1, and zero autocorrelation at every nonzero even lag.
struct QmfResiduals {
  double sum = 0.0;
  double norm = 0.0;
  double even_shift = 0.0;
};

inline QmfResiduals qmf_residuals(std::span<const double> h) {
  QmfResiduals r;
  double s = 0.0, n = 0.0;
  for (double v : h) {
    s += v;
    n += v * v;
  }
  r.sum = std::abs(s - std::sqrt(2.0));
  r.norm = std::abs(n - 1.0);
  for (std::size_t shift = 2; shift < h.size(); shift += 2) {
    double acc = 0.0;
    for (std::size_t k = 0; k + shift < h.size(); ++k) acc += h[k] * h[k + shift];
    r.even_shift = std::max(r.even_shift, std::abs(acc));
  }
  return r;
}

struct FilterBank {
  Basis basis = Basis::haar;
  std::vector<double> lowpass;
  std::vector<double> highpass;

  std::size_t length() const { return lowpass.size(); }
  std::string_view name() const { return basis_name(basis); }
};

// g[k] = (-1)^k h[L-1-k]
inline std::vector<double> quadrature_mirror(std::span<const double> h) {
  const std::size_t L = h.size();
  std::vector<double> g(L);
  for (std::size_t k = 0; k < L; ++k) g[k] = (k % 2 == 0 ? 1.0 : -1.0) * h[L - 1 - k];
  return g;
}

inline FilterBank build_filter_bank(Basis basis) {
  const auto h = detail::scaling_filter(basis);
  const auto res = qmf_residuals(h);
  if (res.sum > 1e-12 || res.norm > 1e-12 || res.even_shift > 1e-10)
    fail(ErrorCategory::invalid_argument,
         "filter table for " + std::string(basis_name(basis)) + " violates QMF conditions");
  FilterBank bank;
  bank.basis = basis;
  bank.lowpass.assign(h.begin(), h.end());
  bank.highpass = quadrature_mirror(h);
  return bank;
}

inline FilterBank build_filter_bank(std::string_view name) {
  return build_filter_bank(parse_basis(name));
}

}  // namespace wecs
