#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "wecs/change_series.hpp"
#include "wecs/error.hpp"
#include "wecs/matrix.hpp"
#include "wecs/rng.hpp"

namespace wecs {

// Filled ellipse added to every image from onset (1-based) on. Pixel centres
// sit at integer (row, col); `a` runs along the column axis before rotation.
struct EllipseSpec {
  double row = 0.0;
  double col = 0.0;
  double a = 1.0;
  double b = 1.0;
  double rotation = 0.0;
  double amplitude = 2.0;
  int onset = 1;
};

struct SceneSequence {
  std::size_t n = 0;
  Dims dims;
  ImageStack images;
  Mask truth;                    // changed at any time after m = 1
  std::vector<Mask> per_step;    // per_step[i]: newly changed at m = i + 2
};

namespace detail {

struct Extent {
  double rows;
  double cols;
};

inline Extent ellipse_extent(const EllipseSpec& e) {
  const double c = std::cos(e.rotation), s = std::sin(e.rotation);
  return {std::sqrt(e.a * e.a * s * s + e.b * e.b * c * c),
          std::sqrt(e.a * e.a * c * c + e.b * e.b * s * s)};
}

inline void validate_ellipse(const EllipseSpec& e, Dims dims, int n) {
  if (!(e.a > 0.0 && e.b > 0.0))
    fail(ErrorCategory::invalid_argument, "ellipse semi-axes must be positive");
  if (e.onset < 1 || e.onset > n)
    fail(ErrorCategory::invalid_argument,
         "ellipse onset " + std::to_string(e.onset) + " outside [1, " + std::to_string(n) + "]");
  const auto ext = ellipse_extent(e);
  const double rmax = static_cast<double>(dims.rows) - 0.5;
  const double cmax = static_cast<double>(dims.cols) - 0.5;
  if (e.row - ext.rows < -0.5 || e.row + ext.rows > rmax || e.col - ext.cols < -0.5 ||
      e.col + ext.cols > cmax)
    fail(ErrorCategory::invalid_argument,
         "ellipse at (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
             ") does not fit in " + to_string(dims));
}

template <typename Fn>
void for_each_inside(const EllipseSpec& e, Dims dims, Fn&& fn) {
  const auto ext = ellipse_extent(e);
  const long r0 = std::max(0L, static_cast<long>(std::floor(e.row - ext.rows)));
  const long r1 = std::min(static_cast<long>(dims.rows) - 1, static_cast<long>(std::ceil(e.row + ext.rows)));
  const long c0 = std::max(0L, static_cast<long>(std::floor(e.col - ext.cols)));
  const long c1 = std::min(static_cast<long>(dims.cols) - 1, static_cast<long>(std::ceil(e.col + ext.cols)));
  const double cs = std::cos(e.rotation), sn = std::sin(e.rotation);
  for (long r = r0; r <= r1; ++r) {
    for (long c = c0; c <= c1; ++c) {
      const double dr = static_cast<double>(r) - e.row;
      const double dc = static_cast<double>(c) - e.col;
      const double x = cs * dc + sn * dr;
      const double y = -sn * dc + cs * dr;
      if ((x / e.a) * (x / e.a) + (y / e.b) * (y / e.b) <= 1.0)
        fn(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    }
  }
}

}  // namespace detail

inline std::size_t rasterized_area(const EllipseSpec& e, Dims dims) {
  std::size_t count = 0;
  detail::for_each_inside(e, dims, [&](std::size_t, std::size_t) { ++count; });
  return count;
}

// Noiseless image at time m (1-based): sum of amplitudes of every ellipse
// with onset <= m.
inline Matrix render_scene_image(Dims dims, const std::vector<EllipseSpec>& specs, int m) {
  Matrix img(dims, 0.0);
  for (const auto& e : specs)
    if (e.onset <= m)
      detail::for_each_inside(e, dims, [&](std::size_t r, std::size_t c) { img(r, c) += e.amplitude; });
  return img;
}

inline std::vector<EllipseSpec> merge_specs(const std::vector<EllipseSpec>& base,
                                            const std::vector<EllipseSpec>& changes) {
  std::vector<EllipseSpec> all = base;
  all.insert(all.end(), changes.begin(), changes.end());
  return all;
}

inline void validate_scene(Dims dims, const std::vector<EllipseSpec>& base,
                           const std::vector<EllipseSpec>& changes, std::size_t n) {
  if (n < 2) fail(ErrorCategory::invalid_argument, "scene needs n >= 2");
  if (dims.rows == 0 || dims.cols == 0) fail(ErrorCategory::invalid_argument, "empty scene dims");
  const int ni = static_cast<int>(n);
  for (const auto& e : base) {
    if (e.onset != 1) fail(ErrorCategory::invalid_argument, "base ellipses must have onset 1");
    detail::validate_ellipse(e, dims, ni);
  }
  for (const auto& e : changes) {
    if (e.onset < 2) fail(ErrorCategory::invalid_argument, "change ellipses need onset >= 2");
    if (!(e.amplitude > 0.0))
      fail(ErrorCategory::invalid_argument, "change ellipses need a positive amplitude");
    detail::validate_ellipse(e, dims, ni);
  }
}

inline SceneSequence gen_ellipse_scene(Dims dims, const std::vector<EllipseSpec>& base,
                                       const std::vector<EllipseSpec>& changes, std::size_t n) {
  validate_scene(dims, base, changes, n);
  const auto all = merge_specs(base, changes);
  SceneSequence s;
  s.n = n;
  s.dims = dims;
  s.images.channel = Channel::generic;
  for (std::size_t m = 1; m <= n; ++m)
    s.images.images.push_back(render_scene_image(dims, all, static_cast<int>(m)));
  s.truth = Mask(dims, 0);
  for (std::size_t m = 1; m < n; ++m) {
    Mask step(dims, 0);
    const auto prev = s.images.images[m - 1].flat();
    const auto cur = s.images.images[m].flat();
    for (std::size_t i = 0; i < step.size(); ++i) {
      if (cur[i] != prev[i]) {
        step.flat()[i] = 1;
        s.truth.flat()[i] = 1;
      }
    }
    s.per_step.push_back(std::move(step));
  }
  return s;
}

// Three elongated base ellipses, then a wave of large ellipses at m = 2,
// small ellipses at m = 3 and dots at m = 4. Geometry is laid out on a
// 256 x 256 canvas and scaled to dims.
inline std::vector<EllipseSpec> paper_like_base(Dims dims, double amplitude = 2.0) {
  const double sr = static_cast<double>(dims.rows) / 256.0;
  const double sc = static_cast<double>(dims.cols) / 256.0;
  const double sa = std::min(sr, sc);
  auto e = [&](double r, double c, double a, double b, double rot) {
    return EllipseSpec{r * sr, c * sc, a * sa, b * sa, rot, amplitude, 1};
  };
  return {e(64, 80, 50, 10, 0.3), e(185, 70, 45, 9, -0.5), e(125, 190, 55, 11, 1.2)};
}

inline std::vector<EllipseSpec> paper_like_changes(Dims dims, double amplitude = 2.0) {
  const double sr = static_cast<double>(dims.rows) / 256.0;
  const double sc = static_cast<double>(dims.cols) / 256.0;
  const double sa = std::min(sr, sc);
  auto e = [&](double r, double c, double a, double b, double rot, int onset) {
    return EllipseSpec{r * sr, c * sc, a * sa, b * sa, rot, amplitude, onset};
  };
  return {
      // large
      e(58, 190, 28, 18, 0.2, 2),
      e(200, 180, 26, 16, -0.7, 2),
      // small
      e(130, 55, 10, 6, 0.5, 3),
      e(100, 125, 9, 5, -0.3, 3),
      e(220, 110, 8, 6, 0.9, 3),
      e(28, 135, 10, 5, 0.0, 3),
      // dots
      e(150, 150, 2.0, 1.5, 0.0, 4),
      e(165, 232, 2.0, 1.5, 0.4, 4),
      e(40, 36, 1.5, 1.5, 0.0, 4),
      e(92, 232, 2.0, 1.0, 1.0, 4),
      e(232, 30, 1.5, 1.0, 0.0, 4),
      e(150, 100, 2.0, 1.5, -0.6, 4),
  };
}

inline SceneSequence paper_like_scene(Dims dims = {256, 256}, std::size_t n = 4,
                                      double amplitude = 2.0) {
  return gen_ellipse_scene(dims, paper_like_base(dims, amplitude),
                           paper_like_changes(dims, amplitude), n);
}

enum class NoiseKind { none, gamma, gaussian };

struct NoiseModel {
  NoiseKind kind = NoiseKind::gamma;
  double looks = 4.0;   // gamma: shape L, scale 1/L
  double sigma = 0.0;   // gaussian
  double offset = 1.0;  // added before multiplicative noise

  static NoiseModel none() { return {NoiseKind::none, 0.0, 0.0, 0.0}; }
  static NoiseModel gamma(double looks, double offset = 1.0) {
    return {NoiseKind::gamma, looks, 0.0, offset};
  }
  static NoiseModel gaussian(double sigma) { return {NoiseKind::gaussian, 0.0, sigma, 0.0}; }

  void validate() const {
    if (kind == NoiseKind::gamma && !(looks >= 1.0))
      fail(ErrorCategory::invalid_argument, "gamma speckle needs looks >= 1");
    if (kind == NoiseKind::gaussian && !(sigma >= 0.0))
      fail(ErrorCategory::invalid_argument, "gaussian noise needs sigma >= 0");
    if (!(offset >= 0.0)) fail(ErrorCategory::invalid_argument, "noise offset must be >= 0");
  }

  // Multiplicative noise leaves strictly positive images, so the log applies.
  // Noiseless and gaussian scenes are analysed as they are.
  bool positive_output() const { return kind == NoiseKind::gamma; }
};

// "none", "gamma:L", "gamma:L:offset" or "gauss:sigma".
inline NoiseModel parse_noise(std::string_view s) {
  auto number = [&](std::string_view t) {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(t), &used);
      if (used != t.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(ErrorCategory::invalid_argument, "bad number '" + std::string(t) + "' in noise spec");
    }
  };
  NoiseModel m;
  if (s == "none") {
    m = NoiseModel::none();
  } else if (s.starts_with("gamma:")) {
    auto rest = s.substr(6);
    const auto colon = rest.find(':');
    m = NoiseModel::gamma(number(rest.substr(0, colon)));
    if (colon != std::string_view::npos) m.offset = number(rest.substr(colon + 1));
  } else if (s.starts_with("gauss:")) {
    m = NoiseModel::gaussian(number(s.substr(6)));
  } else {
    fail(ErrorCategory::invalid_argument,
         "unknown noise model '" + std::string(s) + "'; use none, gamma:L or gauss:SIGMA");
  }
  m.validate();
  return m;
}

inline std::string noise_to_string(const NoiseModel& m) {
  char buf[96];
  switch (m.kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::gamma: std::snprintf(buf, sizeof buf, "gamma:%.17g:%.17g", m.looks, m.offset); return buf;
    case NoiseKind::gaussian: std::snprintf(buf, sizeof buf, "gauss:%.17g", m.sigma); return buf;
  }
  return "none";
}

// Noise for time index m (0-based) draws from its own (seed, m) stream, so
// images can be generated in any order or in parallel.
inline Matrix speckle_image(const Matrix& image, const NoiseModel& model, std::uint64_t seed,
                            std::size_t m) {
  model.validate();
  Matrix out = image;
  if (model.kind == NoiseKind::none) {
    for (double& v : out.flat()) v += model.offset;
    return out;
  }
  Rng rng(seed, m);
  if (model.kind == NoiseKind::gaussian) {
    if (model.sigma == 0.0) return out;
    for (double& v : out.flat()) v += model.sigma * rng.normal();
    return out;
  }
  const double scale = 1.0 / model.looks;
  for (double& v : out.flat()) {
    const double base = v + model.offset;
    if (base < 0.0)
      fail(ErrorCategory::invalid_argument, "multiplicative speckle needs non-negative pixels");
    v = base * rng.gamma(model.looks, scale);
  }
  return out;
}

inline ImageStack add_speckle(const ImageStack& stack, const NoiseModel& model, std::uint64_t seed) {
  ImageStack out = stack;
  for (std::size_t m = 0; m < stack.n(); ++m)
    out.images[m] = speckle_image(stack.images[m], model, seed, m);
  return out;
}

}  // namespace wecs
