#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wecs/change_series.hpp"
#include "wecs/dwt.hpp"
#include "wecs/filter_bank.hpp"
#include "wecs/matrix.hpp"
#include "wecs/screening.hpp"
#include "wecs/synthgen.hpp"

namespace wecs {

struct ScoreMap {
  Matrix values;
  std::string detector_id;
};

inline constexpr std::size_t kRocThresholds = 100;

struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> tpr;
  std::vector<double> fpr;
  double auc = 0.0;
};

// Trapezoidal area under (fpr, tpr) points after anchoring (0,0) and (1,1)
// and sorting by fpr, then tpr.
inline double roc_auc(const std::vector<double>& fpr, const std::vector<double>& tpr) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(fpr.size() + 2);
  pts.emplace_back(0.0, 0.0);
  for (std::size_t i = 0; i < fpr.size(); ++i) pts.emplace_back(fpr[i], tpr[i]);
  pts.emplace_back(1.0, 1.0);
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].first - pts[i - 1].first) * 0.5 * (pts[i].second + pts[i - 1].second);
  return area;
}

// 100 equally spaced thresholds over [min, max] of the score; a pixel is
// called changed when its score is strictly above the threshold.
inline RocCurve roc_curve(const Matrix& score, const Mask& truth) {
  require_same_dims(score.dims(), truth.dims(), "roc_curve");
  require_finite(score, "roc_curve score");
  const std::size_t positives = count_true(truth);
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0)
    fail(ErrorCategory::degenerate, "roc_curve: truth mask must contain both changed and "
                                    "unchanged pixels");
  const auto [lo_it, hi_it] = std::minmax_element(score.flat().begin(), score.flat().end());
  const double lo = *lo_it, hi = *hi_it;

  RocCurve roc;
  roc.thresholds.resize(kRocThresholds);
  for (std::size_t k = 0; k < kRocThresholds; ++k)
    roc.thresholds[k] =
        k + 1 == kRocThresholds
            ? hi
            : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(kRocThresholds - 1);

  // Sort scores per class once; each threshold is then a binary search.
  std::vector<double> pos, neg;
  pos.reserve(positives);
  neg.reserve(negatives);
  for (std::size_t i = 0; i < score.size(); ++i)
    (truth.flat()[i] ? pos : neg).push_back(score.flat()[i]);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  auto above = [](const std::vector<double>& v, double thr) {
    return static_cast<std::size_t>(v.end() - std::upper_bound(v.begin(), v.end(), thr));
  };
  for (double thr : roc.thresholds) {
    roc.tpr.push_back(static_cast<double>(above(pos, thr)) / static_cast<double>(positives));
    roc.fpr.push_back(static_cast<double>(above(neg, thr)) / static_cast<double>(negatives));
  }
  roc.auc = roc_auc(roc.fpr, roc.tpr);
  return roc;
}

inline RocCurve roc_curve(const ScoreMap& score, const Mask& truth) {
  return roc_curve(score.values, truth);
}

// Pearson correlation between a score map and a 0/1 truth mask; 0 when
// either side is constant.
inline double score_truth_correlation(const Matrix& score, const Mask& truth) {
  require_same_dims(score.dims(), truth.dims(), "score_truth_correlation");
  const double n = static_cast<double>(score.size());
  double ms = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    ms += score.flat()[i];
    mt += truth.flat()[i] ? 1.0 : 0.0;
  }
  ms /= n;
  mt /= n;
  double sst = 0.0, sss = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    const double ds = score.flat()[i] - ms;
    const double dt = (truth.flat()[i] ? 1.0 : 0.0) - mt;
    sst += ds * dt;
    sss += ds * ds;
    stt += dt * dt;
  }
  if (sss == 0.0 || stt == 0.0) return 0.0;
  return sst / std::sqrt(sss * stt);
}

enum class DetectorKind { wecs_d, wecs_t, pixel_d, pixel_t, logratio };

struct DetectorSpec {
  DetectorKind kind = DetectorKind::wecs_d;
  Basis basis = Basis::db2;
  int level = 2;

  std::string id() const {
    switch (kind) {
      case DetectorKind::wecs_d:
        return "wecs-d/" + std::string(basis_name(basis)) + "/J" + std::to_string(level);
      case DetectorKind::wecs_t:
        return "wecs-t/" + std::string(basis_name(basis)) + "/J" + std::to_string(level);
      case DetectorKind::pixel_d: return "pixel-d";
      case DetectorKind::pixel_t: return "pixel-t";
      case DetectorKind::logratio: return "logratio";
    }
    return "?";
  }
};

// "wecs-d:db2:2", "wecs-t:haar:1", "pixel-d", "pixel-t", "logratio".
inline DetectorSpec parse_detector(std::string_view s) {
  DetectorSpec d;
  if (s == "pixel-d") return {DetectorKind::pixel_d, Basis::haar, 0};
  if (s == "pixel-t") return {DetectorKind::pixel_t, Basis::haar, 0};
  if (s == "logratio") return {DetectorKind::logratio, Basis::haar, 0};
  if (s.starts_with("wecs-d") || s.starts_with("wecs-t")) {
    d.kind = s[5] == 'd' ? DetectorKind::wecs_d : DetectorKind::wecs_t;
    auto rest = s.substr(6);
    if (rest.empty()) return d;
    if (rest.front() != ':') fail(ErrorCategory::invalid_argument, "bad detector '" + std::string(s) + "'");
    rest.remove_prefix(1);
    const auto colon = rest.find(':');
    d.basis = parse_basis(rest.substr(0, colon));
    if (colon != std::string_view::npos) {
      const std::string lvl(rest.substr(colon + 1));
      if (lvl.empty() || lvl.find_first_not_of("0123456789") != std::string::npos)
        fail(ErrorCategory::invalid_argument, "bad detector level in '" + std::string(s) + "'");
      d.level = std::stoi(lvl);
    }
    return d;
  }
  fail(ErrorCategory::invalid_argument,
       "unknown detector '" + std::string(s) +
           "'; use wecs-d[:basis[:level]], wecs-t[:basis[:level]], pixel-d, pixel-t, logratio");
}

// |R| of the chosen change signal, nearest-upsampled to pixel resolution.
// The stack is used as given: log it first for multiplicative data.
inline ScoreMap detector_wecs(const ImageStack& stack, const FilterBank& bank, int J,
                              SeriesKind kind, Boundary boundary = Boundary::automatic) {
  const auto cs = build_coeff_stack(stack, bank, J, /*require_log=*/false, boundary);
  const auto cube = kind == SeriesKind::d ? deviation_cube(cs) : transition_cube(cs);
  const auto map = correlation_map(cube, change_signal(cube));
  Matrix abs_r = map.values;
  for (double& v : abs_r.flat()) v = std::abs(v);
  ScoreMap s{upsample_nearest(abs_r, J, stack.dims()), {}};
  s.detector_id = J == 0 ? (kind == SeriesKind::d ? "pixel-d" : "pixel-t")
                         : DetectorSpec{kind == SeriesKind::d ? DetectorKind::wecs_d
                                                              : DetectorKind::wecs_t,
                                        bank.basis, J}
                               .id();
  return s;
}

// Sum over time of absolute consecutive log differences.
inline ScoreMap detector_logratio(const ImageStack& stack) {
  if (!stack.log_domain)
    fail(ErrorCategory::invalid_argument, "log-ratio aggregation expects a log-domain stack");
  if (stack.n() < 2) fail(ErrorCategory::invalid_argument, "log-ratio aggregation needs n >= 2");
  stack.validate();
  Matrix score(stack.dims(), 0.0);
  for (std::size_t m = 0; m + 1 < stack.n(); ++m) {
    const auto a = stack.images[m].flat();
    const auto b = stack.images[m + 1].flat();
    for (std::size_t i = 0; i < score.size(); ++i) score.flat()[i] += std::abs(b[i] - a[i]);
  }
  return {std::move(score), "logratio"};
}

inline ScoreMap run_detector(const DetectorSpec& spec, const ImageStack& stack) {
  switch (spec.kind) {
    case DetectorKind::wecs_d:
      return detector_wecs(stack, build_filter_bank(spec.basis), spec.level, SeriesKind::d);
    case DetectorKind::wecs_t:
      return detector_wecs(stack, build_filter_bank(spec.basis), spec.level, SeriesKind::t);
    case DetectorKind::pixel_d:
      return detector_wecs(stack, build_filter_bank(Basis::haar), 0, SeriesKind::d);
    case DetectorKind::pixel_t:
      return detector_wecs(stack, build_filter_bank(Basis::haar), 0, SeriesKind::t);
    case DetectorKind::logratio: return detector_logratio(stack);
  }
  fail(ErrorCategory::invalid_argument, "unhandled detector");
}

// Noisy replicate of a scene as the detectors see it: speckled, then logged
// when the noise keeps pixels positive. Additive-noise scenes are already
// linear and are passed through as if logged.
inline ImageStack noisy_replicate(const SceneSequence& scene, const NoiseModel& noise,
                                  std::uint64_t seed, double log_floor = kDefaultLogFloor) {
  ImageStack noisy = add_speckle(scene.images, noise, seed);
  if (noise.positive_output()) return log_transform(noisy, log_floor);
  noisy.log_domain = true;
  return noisy;
}

struct ComparisonRow {
  std::string detector;
  double mean_auc = 0.0;
  double time_ms = 0.0;  // mean wall-clock per replicate
  double score_truth_corr = 0.0;
  std::vector<double> aucs;  // per seed
  RocCurve mean_roc;         // index-wise mean over seeds
};

inline std::vector<ComparisonRow> run_comparison(const SceneSequence& scene,
                                                 const std::vector<DetectorSpec>& detectors,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 const NoiseModel& noise) {
  if (detectors.empty()) fail(ErrorCategory::invalid_argument, "run_comparison: no detectors");
  if (seeds.empty()) fail(ErrorCategory::invalid_argument, "run_comparison: no seeds");
  std::vector<ComparisonRow> rows(detectors.size());
  for (std::size_t d = 0; d < detectors.size(); ++d) {
    rows[d].detector = detectors[d].id();
    rows[d].mean_roc.thresholds.assign(kRocThresholds, 0.0);
    rows[d].mean_roc.tpr.assign(kRocThresholds, 0.0);
    rows[d].mean_roc.fpr.assign(kRocThresholds, 0.0);
  }
  const double inv = 1.0 / static_cast<double>(seeds.size());
  for (std::uint64_t seed : seeds) {
    const ImageStack stack = noisy_replicate(scene, noise, seed);
    for (std::size_t d = 0; d < detectors.size(); ++d) {
      const auto t0 = std::chrono::steady_clock::now();
      const ScoreMap score = run_detector(detectors[d], stack);
      const auto t1 = std::chrono::steady_clock::now();
      const RocCurve roc = roc_curve(score, scene.truth);
      auto& row = rows[d];
      row.aucs.push_back(roc.auc);
      row.mean_auc += roc.auc * inv;
      row.time_ms += std::chrono::duration<double, std::milli>(t1 - t0).count() * inv;
      row.score_truth_corr += score_truth_correlation(score.values, scene.truth) * inv;
      for (std::size_t k = 0; k < kRocThresholds; ++k) {
        row.mean_roc.thresholds[k] += roc.thresholds[k] * inv;
        row.mean_roc.tpr[k] += roc.tpr[k] * inv;
        row.mean_roc.fpr[k] += roc.fpr[k] * inv;
      }
    }
  }
  for (auto& row : rows) row.mean_roc.auc = roc_auc(row.mean_roc.fpr, row.mean_roc.tpr);
  return rows;
}

}  // namespace wecs
