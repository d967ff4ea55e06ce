#pragma once

// Separable, decimated, orthonormal 2D discrete wavelet transform.
//
// Conventions: analysis filters are applied by correlation, keeping the
// even-indexed outputs and centring the window on the output's footprint:
// out[i] = sum_k h[k] * x[2i + k - (L/2 - 1)], with out-of-range indices folded
// back by the boundary rule. For Haar the offset is zero. Rows are filtered
// first, then columns. Synthesis is the exact adjoint of analysis, which under
// periodic extension is also its inverse.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "wecs/error.hpp"
#include "wecs/filter_bank.hpp"
#include "wecs/matrix.hpp"

namespace wecs {

enum class Boundary {
  periodic,
  symmetric,  // half-sample symmetric: x[-1] = x[0], x[N] = x[N-1]
  automatic,  // periodic when every level sees even dims, symmetric otherwise
};

inline std::string_view boundary_name(Boundary b) {
  switch (b) {
    case Boundary::periodic: return "periodic";
    case Boundary::symmetric: return "symmetric";
    case Boundary::automatic: return "auto";
  }
  return "?";
}

inline Boundary parse_boundary(std::string_view s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "symmetric") return Boundary::symmetric;
  if (s == "auto") return Boundary::automatic;
  fail(ErrorCategory::invalid_argument,
       "unknown boundary mode '" + std::string(s) + "'; supported: periodic, symmetric, auto");
}

inline std::size_t half_up(std::size_t n) { return (n + 1) / 2; }

inline Dims level_dims(Dims d, int level) {
  for (int j = 0; j < level; ++j) d = {half_up(d.rows), half_up(d.cols)};
  return d;
}

inline bool dyadic_compatible(Dims d, int level) {
  const std::size_t block = std::size_t{1} << level;
  return d.rows % block == 0 && d.cols % block == 0;
}

inline Boundary resolve_boundary(Boundary b, Dims d, int level) {
  if (b != Boundary::automatic) return b;
  return dyadic_compatible(d, level) ? Boundary::periodic : Boundary::symmetric;
}

// Largest J for which every level's input is at least one filter long in
// both directions.
inline int max_level(Dims d, std::size_t filter_length) {
  int J = 0;
  while (d.rows >= filter_length && d.cols >= filter_length && d.rows > 1 && d.cols > 1) {
    d = {half_up(d.rows), half_up(d.cols)};
    ++J;
  }
  return J;
}

namespace detail {

inline std::size_t fold_index(long long idx, std::size_t n, Boundary b) {
  const long long N = static_cast<long long>(n);
  if (b == Boundary::periodic) {
    long long j = idx % N;
    return static_cast<std::size_t>(j < 0 ? j + N : j);
  }
  const long long period = 2 * N;
  long long j = idx % period;
  if (j < 0) j += period;
  return static_cast<std::size_t>(j < N ? j : period - 1 - j);
}

inline long long window_offset(std::size_t L) { return static_cast<long long>(L / 2) - 1; }

// taps[i * L + k] = folded input index feeding output i through tap k.
inline std::vector<std::size_t> tap_table(std::size_t n, std::size_t L, Boundary b) {
  const std::size_t out = half_up(n);
  const long long shift = window_offset(L);
  std::vector<std::size_t> taps(out * L);
  for (std::size_t i = 0; i < out; ++i)
    for (std::size_t k = 0; k < L; ++k)
      taps[i * L + k] = fold_index(static_cast<long long>(2 * i + k) - shift, n, b);
  return taps;
}

}  // namespace detail

struct WaveletLevel {
  Matrix approx;
  Matrix horizontal;  // lowpass rows, highpass columns
  Matrix vertical;    // highpass rows, lowpass columns
  Matrix diagonal;
};

// Single-level analysis. Boundary must already be resolved (not automatic).
inline WaveletLevel dwt2_level(const Matrix& image, const FilterBank& bank, Boundary boundary) {
  if (boundary == Boundary::automatic) boundary = resolve_boundary(boundary, image.dims(), 1);
  const std::size_t L = bank.length();
  const std::size_t R = image.rows(), C = image.cols();
  if (R < L || C < L || R < 2 || C < 2)
    fail(ErrorCategory::infeasible_level,
         "image " + to_string(image.dims()) + " smaller than " + std::string(bank.name()) +
             " filter support " + std::to_string(L));
  require_finite(image, "dwt2_level input");

  const auto& h = bank.lowpass;
  const auto& g = bank.highpass;
  const std::size_t Ch = half_up(C), Rh = half_up(R);

  Matrix lo(R, Ch), hi(R, Ch);
  const auto col_taps = detail::tap_table(C, L, boundary);
  for (std::size_t r = 0; r < R; ++r) {
    const auto in = image.row(r);
    auto lo_row = lo.row(r);
    auto hi_row = hi.row(r);
    for (std::size_t i = 0; i < Ch; ++i) {
      const std::size_t* t = &col_taps[i * L];
      double a = 0.0, d = 0.0;
      for (std::size_t k = 0; k < L; ++k) {
        const double x = in[t[k]];
        a += h[k] * x;
        d += g[k] * x;
      }
      lo_row[i] = a;
      hi_row[i] = d;
    }
  }

  WaveletLevel out{Matrix(Rh, Ch), Matrix(Rh, Ch), Matrix(Rh, Ch), Matrix(Rh, Ch)};
  const auto row_taps = detail::tap_table(R, L, boundary);
  for (std::size_t i = 0; i < Rh; ++i) {
    auto ll = out.approx.row(i);
    auto lh = out.horizontal.row(i);
    auto hl = out.vertical.row(i);
    auto hh = out.diagonal.row(i);
    for (std::size_t k = 0; k < L; ++k) {
      const std::size_t src = row_taps[i * L + k];
      const auto lo_src = lo.row(src);
      const auto hi_src = hi.row(src);
      const double hk = h[k], gk = g[k];
      for (std::size_t c = 0; c < Ch; ++c) {
        ll[c] += hk * lo_src[c];
        lh[c] += gk * lo_src[c];
        hl[c] += hk * hi_src[c];
        hh[c] += gk * hi_src[c];
      }
    }
  }
  return out;
}

// Adjoint of dwt2_level onto an image of the given dims. Any of the detail
// bands may be empty, meaning zero.
inline Matrix idwt2_level(const WaveletLevel& bands, Dims target, const FilterBank& bank,
                          Boundary boundary) {
  if (boundary == Boundary::automatic) boundary = resolve_boundary(boundary, target, 1);
  const std::size_t L = bank.length();
  const std::size_t R = target.rows, C = target.cols;
  const Dims half{half_up(R), half_up(C)};
  require_same_dims(bands.approx.dims(), half, "idwt2_level approx band");
  for (const Matrix* m : {&bands.horizontal, &bands.vertical, &bands.diagonal})
    if (!m->empty()) require_same_dims(m->dims(), half, "idwt2_level detail band");
  if (R < L || C < L)
    fail(ErrorCategory::infeasible_level,
         "target " + to_string(target) + " smaller than filter support " + std::to_string(L));

  const auto& h = bank.lowpass;
  const auto& g = bank.highpass;
  const std::size_t Ch = half.cols, Rh = half.rows;

  Matrix lo(R, Ch), hi(R, Ch);
  const auto row_taps = detail::tap_table(R, L, boundary);
  for (std::size_t i = 0; i < Rh; ++i) {
    for (std::size_t k = 0; k < L; ++k) {
      const std::size_t dst = row_taps[i * L + k];
      auto lo_dst = lo.row(dst);
      auto hi_dst = hi.row(dst);
      const double hk = h[k], gk = g[k];
      const auto ll = bands.approx.row(i);
      for (std::size_t c = 0; c < Ch; ++c) lo_dst[c] += hk * ll[c];
      if (!bands.horizontal.empty()) {
        const auto lh = bands.horizontal.row(i);
        for (std::size_t c = 0; c < Ch; ++c) lo_dst[c] += gk * lh[c];
      }
      if (!bands.vertical.empty()) {
        const auto hl = bands.vertical.row(i);
        for (std::size_t c = 0; c < Ch; ++c) hi_dst[c] += hk * hl[c];
      }
      if (!bands.diagonal.empty()) {
        const auto hh = bands.diagonal.row(i);
        for (std::size_t c = 0; c < Ch; ++c) hi_dst[c] += gk * hh[c];
      }
    }
  }

  Matrix out(R, C);
  const auto col_taps = detail::tap_table(C, L, boundary);
  for (std::size_t r = 0; r < R; ++r) {
    auto dst = out.row(r);
    const auto lo_row = lo.row(r);
    const auto hi_row = hi.row(r);
    for (std::size_t i = 0; i < Ch; ++i) {
      const std::size_t* t = &col_taps[i * L];
      const double a = lo_row[i], d = hi_row[i];
      for (std::size_t k = 0; k < L; ++k) dst[t[k]] += h[k] * a + g[k] * d;
    }
  }
  return out;
}

struct CoeffMatrix {
  int level = 0;
  Matrix values;
  Dims source_dims;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
};

inline void require_feasible_level(Dims d, const FilterBank& bank, int J) {
  if (J < 0) fail(ErrorCategory::invalid_argument, "level must be non-negative");
  const int jmax = max_level(d, bank.length());
  if (J > jmax)
    fail(ErrorCategory::infeasible_level,
         "level " + std::to_string(J) + " infeasible for " + to_string(d) + " with " +
             std::string(bank.name()) + "; maximum feasible level is " + std::to_string(jmax));
}

// Level-J approximation coefficients. The boundary rule is resolved once from
// the source dims and J, then used at every level.
inline CoeffMatrix dwt2_approx(const Matrix& image, const FilterBank& bank, int J,
                               Boundary boundary = Boundary::automatic) {
  require_feasible_level(image.dims(), bank, J);
  if (J == 0) {
    require_finite(image, "dwt2_approx input");
    return {0, image, image.dims()};
  }
  const Boundary b = resolve_boundary(boundary, image.dims(), J);
  Matrix current = dwt2_level(image, bank, b).approx;
  for (int j = 1; j < J; ++j) current = dwt2_level(current, bank, b).approx;
  return {J, std::move(current), image.dims()};
}

// J synthesis steps with zero details from a level-J coefficient grid.
inline Matrix reconstruct_approx(const Matrix& coeffs, int J, Dims target, const FilterBank& bank,
                                 Boundary boundary = Boundary::automatic) {
  require_same_dims(coeffs.dims(), level_dims(target, J), "reconstruct_approx coefficient grid");
  if (J == 0) return coeffs;
  require_feasible_level(target, bank, J);
  const Boundary b = resolve_boundary(boundary, target, J);
  Matrix current = coeffs;
  for (int j = J - 1; j >= 0; --j) {
    WaveletLevel bands;
    bands.approx = std::move(current);
    current = idwt2_level(bands, level_dims(target, j), bank, b);
  }
  return current;
}

// Share of the image's L2 energy carried by its level-J approximation.
inline double approx_energy_fraction(const Matrix& image, const FilterBank& bank, int J,
                                     Boundary boundary = Boundary::automatic) {
  const double total = sum_squares(image);
  if (total == 0.0)
    fail(ErrorCategory::degenerate, "approx_energy_fraction: image has zero energy");
  const auto approx = dwt2_approx(image, bank, J, boundary);
  const Matrix rec = reconstruct_approx(approx.values, J, image.dims(), bank, boundary);
  return sum_squares(rec) / total;
}

enum class UpsampleMode { nearest, reconstruction };

// Replicates each level-J coefficient over its 2^J x 2^J pixel footprint,
// cropped at the image edge.
template <typename T>
BasicMatrix<T> upsample_nearest(const BasicMatrix<T>& map, int J, Dims target) {
  require_same_dims(map.dims(), level_dims(target, J), "upsample_coeff_map");
  BasicMatrix<T> out(target);
  for (std::size_t r = 0; r < target.rows; ++r) {
    const auto src = map.row(r >> J);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < target.cols; ++c) dst[c] = src[c >> J];
  }
  return out;
}

inline Matrix upsample_coeff_map(const Matrix& map, int J, Dims target, UpsampleMode mode,
                                 const FilterBank& bank, Boundary boundary = Boundary::automatic) {
  if (mode == UpsampleMode::nearest) return upsample_nearest(map, J, target);
  return reconstruct_approx(map, J, target, bank, boundary);
}

}  // namespace wecs
