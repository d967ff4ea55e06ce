#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "wecs/change_series.hpp"
#include "wecs/dwt.hpp"
#include "wecs/error.hpp"
#include "wecs/matrix.hpp"

namespace wecs {

// Per-coefficient Pearson correlation between a deviation series and the
// change signal. Zero-variance series carry 0 and are flagged.
struct CorrelationMap {
  SeriesKind kind = SeriesKind::d;
  Matrix values;
  Mask degenerate;

  Dims dims() const { return values.dims(); }
  std::size_t non_degenerate_count() const { return values.size() - count_true(degenerate); }
};

inline CorrelationMap correlation_map(const DeviationCube& cube, const ChangeSignal& signal) {
  if (cube.kind != signal.kind)
    fail(ErrorCategory::invalid_argument, "correlation_map: cube is " +
                                              std::string(kind_name(cube.kind)) + ", signal is " +
                                              std::string(kind_name(signal.kind)));
  if (cube.length() != signal.length())
    fail(ErrorCategory::dimension_mismatch, "correlation_map: cube length " +
                                                std::to_string(cube.length()) +
                                                " vs signal length " +
                                                std::to_string(signal.length()));
  const std::size_t n = cube.length();
  if (n < 3)
    fail(ErrorCategory::degenerate,
         "correlation_map: series length " + std::to_string(n) + " < 3 is too short to screen");

  const Dims grid = cube.grid_dims();
  for (const auto& e : cube.entries) require_same_dims(e.dims(), grid, "deviation cube entry");
  const std::size_t p = grid.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  double y_mean = 0.0;
  for (double y : signal.values) y_mean += y;
  y_mean *= inv_n;
  std::vector<double> y_dev(n);
  double syy = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    y_dev[m] = signal.values[m] - y_mean;
    syy += y_dev[m] * y_dev[m];
  }
  const auto [ymin, ymax] = std::minmax_element(signal.values.begin(), signal.values.end());
  const bool signal_flat = *ymin == *ymax || syy == 0.0;

  CorrelationMap out{cube.kind, Matrix(grid), Mask(grid, 0)};
  if (signal_flat) {
    std::fill(out.degenerate.flat().begin(), out.degenerate.flat().end(), 1);
    return out;
  }

  // Pass 1: per-site mean and range, streaming over time for locality.
  std::vector<double> x_mean(p, 0.0), x_min(cube.entries[0].flat().begin(),
                                            cube.entries[0].flat().end());
  std::vector<double> x_max = x_min;
  for (const auto& e : cube.entries) {
    const auto x = e.flat();
    for (std::size_t i = 0; i < p; ++i) {
      x_mean[i] += x[i];
      x_min[i] = std::min(x_min[i], x[i]);
      x_max[i] = std::max(x_max[i], x[i]);
    }
  }
  for (double& v : x_mean) v *= inv_n;

  // Pass 2: centred cross products.
  std::vector<double> sxy(p, 0.0), sxx(p, 0.0);
  for (std::size_t m = 0; m < n; ++m) {
    const auto x = cube.entries[m].flat();
    const double yd = y_dev[m];
    for (std::size_t i = 0; i < p; ++i) {
      const double xd = x[i] - x_mean[i];
      sxy[i] += xd * yd;
      sxx[i] += xd * xd;
    }
  }

  auto r = out.values.flat();
  auto deg = out.degenerate.flat();
  for (std::size_t i = 0; i < p; ++i) {
    if (x_min[i] == x_max[i] || sxx[i] == 0.0) {
      deg[i] = 1;
      r[i] = 0.0;
      continue;
    }
    r[i] = std::clamp(sxy[i] / std::sqrt(sxx[i] * syy), -1.0, 1.0);
  }
  return out;
}

// Pixel-resolution variant: every pixel inherits the correlation of the
// coefficient whose footprint covers it. This equals correlating nearest-
// upsampled cube entries against the (unchanged) change signal.
inline CorrelationMap upsample_correlation_map(const CorrelationMap& map, int J, Dims target) {
  return {map.kind, upsample_nearest(map.values, J, target),
          upsample_nearest(map.degenerate, J, target)};
}

enum class ThresholdMode { absolute, quantile };

struct ThresholdSpec {
  ThresholdMode mode = ThresholdMode::quantile;
  double value = 0.99;

  static ThresholdSpec absolute(double tau) { return {ThresholdMode::absolute, tau}; }
  static ThresholdSpec quantile(double q) { return {ThresholdMode::quantile, q}; }

  void validate() const {
    if (mode == ThresholdMode::absolute && !(value >= 0.0))
      fail(ErrorCategory::invalid_argument, "absolute threshold must be >= 0");
    if (mode == ThresholdMode::quantile && !(value >= 0.0 && value < 1.0))
      fail(ErrorCategory::invalid_argument, "quantile must lie in [0, 1)");
  }
};

// Lower empirical quantile: the ceil(q*N)-th smallest value (1-based), so that
// with distinct values exactly N - ceil(q*N) entries lie strictly above it.
// q*N within 1e-9 of an integer is snapped to it, so decimal grids such as
// 0.99 * 1.2e6 land on the intended rank.
// 1-based rank of the lower empirical q-quantile among N values: ceil(qN),
// with qN snapped to an integer when within rounding distance of one.
inline std::size_t quantile_rank(std::size_t N, double q) {
  const double n = static_cast<double>(N);
  double pos = q * n;
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) <= 1e-9 * std::max(1.0, n)) pos = nearest;
  const auto rank = static_cast<std::size_t>(std::ceil(pos));
  return std::clamp<std::size_t>(rank, 1, N);
}

inline double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) fail(ErrorCategory::degenerate, "quantile of an empty set");
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(quantile_rank(values.size(), q) - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

enum class SelectionSource { d, t, union_of };

inline std::string_view source_name(SelectionSource s) {
  switch (s) {
    case SelectionSource::d: return "d";
    case SelectionSource::t: return "t";
    case SelectionSource::union_of: return "union";
  }
  return "?";
}

struct SelectionMask {
  Mask indices;
  std::size_t count = 0;
  SelectionSource source = SelectionSource::d;
  ThresholdSpec spec;
  double tau = 0.0;  // threshold actually applied to |R|

  Dims dims() const { return indices.dims(); }
};

inline double threshold_for(const CorrelationMap& map, const ThresholdSpec& spec) {
  spec.validate();
  if (spec.mode == ThresholdMode::absolute) return spec.value;
  std::vector<double> abs_r;
  abs_r.reserve(map.values.size());
  for (std::size_t i = 0; i < map.values.size(); ++i)
    if (!map.degenerate.flat()[i]) abs_r.push_back(std::abs(map.values.flat()[i]));
  return empirical_quantile(std::move(abs_r), spec.value);
}

// M = {(k,l) : |R(k,l)| > tau}, degenerate entries never selected.
inline SelectionMask select_indices(const CorrelationMap& map, const ThresholdSpec& spec) {
  if (map.non_degenerate_count() == 0)
    fail(ErrorCategory::degenerate, "select_indices: every correlation entry is degenerate");
  SelectionMask sel;
  sel.source = map.kind == SeriesKind::d ? SelectionSource::d : SelectionSource::t;
  sel.spec = spec;
  sel.tau = threshold_for(map, spec);
  sel.indices = Mask(map.dims(), 0);
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    if (!map.degenerate.flat()[i] && std::abs(map.values.flat()[i]) > sel.tau) {
      sel.indices.flat()[i] = 1;
      ++sel.count;
    }
  }
  return sel;
}

inline SelectionMask union_selection(const SelectionMask& a, const SelectionMask& b) {
  require_same_dims(a.dims(), b.dims(), "union_selection");
  SelectionMask u;
  u.source = SelectionSource::union_of;
  u.spec = a.spec;
  u.tau = a.tau;
  u.indices = Mask(a.dims(), 0);
  for (std::size_t i = 0; i < u.indices.size(); ++i) {
    const bool v = a.indices.flat()[i] || b.indices.flat()[i];
    u.indices.flat()[i] = v;
    u.count += v;
  }
  return u;
}

struct TimeFlags {
  std::vector<std::size_t> flagged;  // 0-based time indices
  double median = 0.0;
  double mad = 0.0;  // unscaled median absolute deviation
  double k = 2.0;

  double threshold() const { return median + k * mad; }
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) fail(ErrorCategory::invalid_argument, "median of an empty series");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Times whose signal strictly exceeds median + k * MAD.
inline TimeFlags flag_change_times(const ChangeSignal& signal, double k = 2.0) {
  if (signal.length() < 2)
    fail(ErrorCategory::invalid_argument, "flag_change_times needs at least 2 values");
  if (!(k >= 0.0)) fail(ErrorCategory::invalid_argument, "MAD multiplier must be >= 0");
  TimeFlags f;
  f.k = k;
  f.median = median_of(signal.values);
  std::vector<double> abs_dev;
  abs_dev.reserve(signal.length());
  for (double v : signal.values) abs_dev.push_back(std::abs(v - f.median));
  f.mad = median_of(std::move(abs_dev));
  const double thr = f.threshold();
  for (std::size_t m = 0; m < signal.length(); ++m)
    if (signal.values[m] > thr) f.flagged.push_back(m);
  return f;
}

// Quantile grid of the published threshold table: 0.50..0.95 by 0.05, then
// 0.99..0.999 by 0.001.
inline std::vector<double> default_quantile_grid() {
  return {0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95,
          0.99, 0.991, 0.992, 0.993, 0.994, 0.995, 0.996, 0.997, 0.998, 0.999};
}

struct ReportRow {
  double quantile = 0.0;
  double tau_d = 0.0;
  std::size_t count_d = 0;
  double tau_t = 0.0;
  std::size_t count_t = 0;
  std::size_t count_union = 0;
};

struct ScreeningSelection {
  ThresholdSpec spec;
  SelectionMask d;
  SelectionMask t;
  SelectionMask both;
};

struct ScreeningReport {
  std::vector<ReportRow> rows;
  std::vector<ScreeningSelection> selections;
  TimeFlags flags_d;
  TimeFlags flags_t;
};

inline ScreeningSelection screen_both(const CorrelationMap& map_d, const CorrelationMap& map_t,
                                      const ThresholdSpec& spec) {
  ScreeningSelection s{spec, select_indices(map_d, spec), select_indices(map_t, spec), {}};
  s.both = union_selection(s.d, s.t);
  return s;
}

// Table rows over quantile_grid; full masks for each entry of mask_specs.
inline ScreeningReport screening_report(const CorrelationMap& map_d, const CorrelationMap& map_t,
                                        const ChangeSignal& d, const ChangeSignal& t,
                                        const std::vector<double>& quantile_grid,
                                        const std::vector<ThresholdSpec>& mask_specs,
                                        double mad_k = 2.0) {
  require_same_dims(map_d.dims(), map_t.dims(), "screening_report maps");
  ScreeningReport rep;
  if (!quantile_grid.empty()) {
    auto sorted_abs = [](const CorrelationMap& map) {
      if (map.non_degenerate_count() == 0)
        fail(ErrorCategory::degenerate, "screening_report: every correlation entry is degenerate");
      std::vector<double> v;
      v.reserve(map.non_degenerate_count());
      for (std::size_t i = 0; i < map.values.size(); ++i)
        if (!map.degenerate.flat()[i]) v.push_back(std::abs(map.values.flat()[i]));
      std::sort(v.begin(), v.end());
      return v;
    };
    const auto abs_d = sorted_abs(map_d), abs_t = sorted_abs(map_t);
    auto above = [](const std::vector<double>& v, double tau) {
      return static_cast<std::size_t>(v.end() - std::upper_bound(v.begin(), v.end(), tau));
    };
    for (double q : quantile_grid) {
      ThresholdSpec::quantile(q).validate();
      const double td = abs_d[quantile_rank(abs_d.size(), q) - 1];
      const double tt = abs_t[quantile_rank(abs_t.size(), q) - 1];
      std::size_t both = 0;
      for (std::size_t i = 0; i < map_d.values.size(); ++i)
        both += (!map_d.degenerate.flat()[i] && std::abs(map_d.values.flat()[i]) > td) ||
                (!map_t.degenerate.flat()[i] && std::abs(map_t.values.flat()[i]) > tt);
      rep.rows.push_back({q, td, above(abs_d, td), tt, above(abs_t, tt), both});
    }
  }
  for (const auto& spec : mask_specs) rep.selections.push_back(screen_both(map_d, map_t, spec));
  rep.flags_d = flag_change_times(d, mad_k);
  rep.flags_t = flag_change_times(t, mad_k);
  return rep;
}

}  // namespace wecs
