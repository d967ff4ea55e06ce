#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wecs/dwt.hpp"
#include "wecs/error.hpp"
#include "wecs/filter_bank.hpp"
#include "wecs/matrix.hpp"

namespace wecs {

enum class Channel { generic, vv, vh, combined };

inline std::string_view channel_name(Channel c) {
  switch (c) {
    case Channel::generic: return "generic";
    case Channel::vv: return "VV";
    case Channel::vh: return "VH";
    case Channel::combined: return "combined";
  }
  return "?";
}

inline Channel parse_channel(std::string_view s) {
  if (s == "generic" || s.empty()) return Channel::generic;
  if (s == "VV" || s == "vv") return Channel::vv;
  if (s == "VH" || s == "vh") return Channel::vh;
  if (s == "combined") return Channel::combined;
  fail(ErrorCategory::invalid_argument, "unknown channel tag '" + std::string(s) + "'");
}

struct ImageStack {
  std::vector<Matrix> images;
  Channel channel = Channel::generic;
  bool log_domain = false;
  std::vector<std::string> timestamps;  // empty, or one ISO-8601 label per image

  std::size_t n() const { return images.size(); }
  Dims dims() const { return images.empty() ? Dims{} : images.front().dims(); }

  void validate() const {
    for (std::size_t m = 1; m < images.size(); ++m)
      require_same_dims(images[m].dims(), images.front().dims(),
                        "image stack entry " + std::to_string(m));
    if (!timestamps.empty()) {
      if (timestamps.size() != images.size())
        fail(ErrorCategory::invalid_argument, "timestamp count does not match image count");
      // ISO-8601 labels of a common format sort lexicographically.
      for (std::size_t m = 1; m < timestamps.size(); ++m)
        if (!(timestamps[m - 1] < timestamps[m]))
          fail(ErrorCategory::invalid_argument,
               "timestamps not strictly increasing at entry " + std::to_string(m));
    }
  }
};

inline constexpr double kDefaultLogFloor = 1e-10;

inline Matrix log_image(const Matrix& raw, double floor = kDefaultLogFloor) {
  if (!(floor > 0.0)) fail(ErrorCategory::invalid_argument, "log floor must be positive");
  Matrix out(raw.dims());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = raw.flat()[i];
    if (v < 0.0 || std::isnan(v))
      fail(ErrorCategory::invalid_argument,
           "log_transform: negative or NaN intensity " + std::to_string(v) + " at flat index " +
               std::to_string(i));
    out.flat()[i] = std::log(std::max(v, floor));
  }
  return out;
}

inline ImageStack log_transform(const ImageStack& raw, double floor = kDefaultLogFloor) {
  if (raw.log_domain) fail(ErrorCategory::invalid_argument, "stack is already in log domain");
  ImageStack out = raw;
  for (auto& img : out.images) img = log_image(img, floor);
  out.log_domain = true;
  return out;
}

inline Matrix combine_euclid(const Matrix& a, const Matrix& b) {
  require_same_dims(a.dims(), b.dims(), "combine_channels_euclid");
  Matrix out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) out.flat()[i] = std::hypot(a.flat()[i], b.flat()[i]);
  return out;
}

// Pixel-wise sqrt(a^2 + b^2). Intended for raw intensities; pass
// allow_log_domain to combine log-images instead.
inline ImageStack combine_channels_euclid(const ImageStack& a, const ImageStack& b,
                                          bool allow_log_domain = false) {
  if (a.n() != b.n())
    fail(ErrorCategory::dimension_mismatch, "channel stacks differ in length: " +
                                                std::to_string(a.n()) + " vs " +
                                                std::to_string(b.n()));
  if (a.log_domain != b.log_domain || (a.log_domain && !allow_log_domain))
    fail(ErrorCategory::invalid_argument, "channel combination expects raw-domain stacks");
  ImageStack out;
  out.channel = Channel::combined;
  out.log_domain = a.log_domain;
  out.timestamps = a.timestamps;
  out.images.reserve(a.n());
  for (std::size_t m = 0; m < a.n(); ++m) out.images.push_back(combine_euclid(a.images[m], b.images[m]));
  return out;
}

// Time-ordered level-J approximation coefficients with a cached mean.
//
// The mean is updated incrementally, mean += (X - mean) / n, in time order, so
// a stack grown by appends is bit-identical to one built in a single batch.
class CoeffStack {
 public:
  CoeffStack() = default;
  CoeffStack(Basis basis, int level, Boundary boundary, Dims source_dims)
      : basis_(basis), level_(level), boundary_(boundary), source_dims_(source_dims) {}

  std::size_t n() const { return coeffs_.size(); }
  int level() const { return level_; }
  Basis basis() const { return basis_; }
  std::string_view bank_name() const { return basis_name(basis_); }
  Boundary boundary() const { return boundary_; }
  Dims source_dims() const { return source_dims_; }
  Dims grid_dims() const { return level_dims(source_dims_, level_); }
  std::size_t p() const { return grid_dims().size(); }

  const std::vector<Matrix>& coeffs() const { return coeffs_; }
  const Matrix& operator[](std::size_t m) const { return coeffs_[m]; }
  const Matrix& mean_coeffs() const { return mean_; }

  // Adds an already transformed level-J coefficient grid.
  void push_coeffs(Matrix c) {
    require_same_dims(c.dims(), grid_dims(), "coefficient grid");
    if (mean_.empty()) mean_ = Matrix(grid_dims());
    const double n = static_cast<double>(coeffs_.size() + 1);
    auto mean = mean_.flat();
    const auto x = c.flat();
    for (std::size_t i = 0; i < x.size(); ++i) mean[i] += (x[i] - mean[i]) / n;
    coeffs_.push_back(std::move(c));
  }

  void push_image(const Matrix& image, const FilterBank& bank) {
    require_same_dims(image.dims(), source_dims_, "appended image");
    if (bank.basis != basis_)
      fail(ErrorCategory::invalid_argument, "appended image uses basis " +
                                                std::string(bank.name()) + ", stack uses " +
                                                std::string(bank_name()));
    push_coeffs(dwt2_approx(image, bank, level_, boundary_).values);
  }

 private:
  Basis basis_ = Basis::haar;
  int level_ = 0;
  Boundary boundary_ = Boundary::automatic;
  Dims source_dims_;
  std::vector<Matrix> coeffs_;
  Matrix mean_;
};

// Callers that feed synthetic additive scenes pass require_log = false.
inline CoeffStack build_coeff_stack(const ImageStack& stack, const FilterBank& bank, int J,
                                    bool require_log = true,
                                    Boundary boundary = Boundary::automatic) {
  if (stack.n() == 0) fail(ErrorCategory::invalid_argument, "empty image stack");
  stack.validate();
  if (require_log && !stack.log_domain)
    fail(ErrorCategory::invalid_argument,
         "coefficient stack expects log-domain images (use --no-log for additive scenes)");
  require_feasible_level(stack.dims(), bank, J);
  CoeffStack cs(bank.basis, J, boundary, stack.dims());
  for (const auto& img : stack.images) cs.push_image(img, bank);
  return cs;
}

inline CoeffStack append_image(const CoeffStack& cs, const Matrix& image, const FilterBank& bank) {
  CoeffStack out = cs;
  out.push_image(image, bank);
  return out;
}

enum class SeriesKind { d, t };

inline std::string_view kind_name(SeriesKind k) { return k == SeriesKind::d ? "d" : "t"; }

struct DeviationCube {
  SeriesKind kind = SeriesKind::d;
  std::vector<Matrix> entries;

  std::size_t length() const { return entries.size(); }
  Dims grid_dims() const { return entries.empty() ? Dims{} : entries.front().dims(); }
};

inline void require_two(const CoeffStack& cs, std::string_view what) {
  if (cs.n() < 2)
    fail(ErrorCategory::invalid_argument,
         std::string(what) + " needs at least 2 time points, got " + std::to_string(cs.n()));
}

// D(m) = (X(m) - mean)^2 element-wise, m = 1..n.
inline DeviationCube deviation_cube(const CoeffStack& cs) {
  require_two(cs, "deviation_cube");
  DeviationCube cube{SeriesKind::d, {}};
  cube.entries.reserve(cs.n());
  const auto mean = cs.mean_coeffs().flat();
  for (const auto& X : cs.coeffs()) {
    Matrix D(X.dims());
    const auto x = X.flat();
    auto out = D.flat();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double dev = x[i] - mean[i];
      out[i] = dev * dev;
    }
    cube.entries.push_back(std::move(D));
  }
  return cube;
}

// T(m) = (X(m+1) - X(m))^2 element-wise, m = 1..n-1.
inline DeviationCube transition_cube(const CoeffStack& cs) {
  require_two(cs, "transition_cube");
  DeviationCube cube{SeriesKind::t, {}};
  cube.entries.reserve(cs.n() - 1);
  for (std::size_t m = 0; m + 1 < cs.n(); ++m) {
    const auto a = cs[m].flat();
    const auto b = cs[m + 1].flat();
    Matrix T(cs[m].dims());
    auto out = T.flat();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = b[i] - a[i];
      out[i] = diff * diff;
    }
    cube.entries.push_back(std::move(T));
  }
  return cube;
}

struct ChangeSignal {
  SeriesKind kind = SeriesKind::d;
  std::vector<double> values;

  std::size_t length() const { return values.size(); }
};

inline ChangeSignal change_signal(const DeviationCube& cube) {
  if (cube.entries.empty()) fail(ErrorCategory::invalid_argument, "change_signal: empty cube");
  ChangeSignal s{cube.kind, {}};
  s.values.reserve(cube.length());
  for (const auto& e : cube.entries) {
    CompensatedSum acc;
    for (double v : e.flat()) acc.add(v);
    s.values.push_back(acc.value());
  }
  return s;
}

struct EnergyApportionment {
  double total = 0.0;
  double mean_term = 0.0;
  double deviation_term = 0.0;
  // |total - mean_term - deviation_term| / total, or the absolute residual
  // when total is zero.
  double residual = 0.0;
  bool residual_is_relative = true;
};

inline EnergyApportionment energy_apportionment(const CoeffStack& cs) {
  if (cs.n() == 0) fail(ErrorCategory::invalid_argument, "energy_apportionment: empty stack");
  const auto mean = cs.mean_coeffs().flat();
  CompensatedSum total, dev;
  for (const auto& X : cs.coeffs()) {
    const auto x = X.flat();
    for (std::size_t i = 0; i < x.size(); ++i) {
      total.add(x[i] * x[i]);
      const double d = x[i] - mean[i];
      dev.add(d * d);
    }
  }
  EnergyApportionment e;
  e.total = total.value();
  e.mean_term = static_cast<double>(cs.n()) * sum_squares(mean);
  e.deviation_term = dev.value();
  const double abs_residual = std::abs(e.total - e.mean_term - e.deviation_term);
  if (e.total == 0.0) {
    e.residual = abs_residual;
    e.residual_is_relative = false;
  } else {
    e.residual = abs_residual / e.total;
  }
  return e;
}

}  // namespace wecs
