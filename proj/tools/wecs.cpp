// wecs: command-line front end for wavelet-energy change screening.
//
//   wecs synth   --out DIR [--n 4 --dims 256x256 --noise gamma:4 --seed 1]
//   wecs analyze --manifest M --out DIR [--basis db2 --level 2 ...]
//   wecs append  --state DIR --image PATH
//   wecs roc     --scores S --truth T --out roc.csv
//   wecs compare --scene DIR --detectors LIST --seeds K --out comparison.csv

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wecs/pipeline.hpp"

namespace {

using namespace wecs;
namespace fs = std::filesystem;

Dims parse_dims(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const auto rows = std::stoul(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(s);
    const auto cols = std::stoul(s.substr(x + 1), &used);
    if (used != s.size() - x - 1 || rows == 0 || cols == 0) throw std::invalid_argument(s);
    return {rows, cols};
  } catch (const std::exception&) {
    fail(ErrorCategory::invalid_argument, "bad dims '" + s + "', expected ROWSxCOLS");
  }
}

template <typename T>
std::vector<T> split_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<T, int>) {
        out.push_back(std::stoi(item, &used));
      } else {
        out.push_back(std::stod(item, &used));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCategory::invalid_argument, "bad list element '" + item + "'");
    }
  }
  return out;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string version_text() {
  return std::string("wecs ") + pipeline::kToolVersion + "\nmatrix format: WECS1\n" +
         "manifest format: " + std::string(io::kManifestFormat) + "/" +
         std::string(io::kManifestVersion) + "\nstate format: " + pipeline::kStateVersion +
         "\nscene format: " + pipeline::kSceneVersion + "\ngenerator: " + kGeneratorVersion + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wavelet energy correlation screening for multi-temporal image stacks"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print format and generator versions");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic ellipse scene");
  std::string synth_out, synth_dims = "256x256", synth_noise = "gamma:4";
  std::size_t synth_n = 4;
  std::uint64_t synth_seed = 1;
  double synth_amp = 2.0;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", synth_n, "Number of time points")->capture_default_str();
  synth->add_option("--dims", synth_dims, "Image size ROWSxCOLS")->capture_default_str();
  synth->add_option("--noise", synth_noise, "none | gamma:L[:offset] | gauss:SIGMA")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Noise seed")->capture_default_str();
  synth->add_option("--amplitude", synth_amp, "Ellipse amplitude")->capture_default_str();

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Change signals, correlation maps and screening");
  std::string an_manifest, an_out, an_basis = "db2", an_boundary = "auto", an_combine;
  std::string an_quantiles = "0.99", an_levels = "1,2,3,4", an_table;
  int an_level = 2;
  double an_mad_k = 2.0, an_floor = kDefaultLogFloor;
  bool an_no_log = false, an_pixel = false, an_combine_after_log = false;
  analyze->add_option("--manifest", an_manifest, "Stack manifest (JSON)")->required();
  analyze->add_option("--out", an_out, "Output directory")->required();
  analyze->add_option("--basis", an_basis, "haar|db2|db4|sym2|sym4|sym8|coif4")
      ->capture_default_str();
  analyze->add_option("--level", an_level, "Approximation level J (0 = pixel domain)")
      ->capture_default_str();
  analyze->add_option("--boundary", an_boundary, "periodic | symmetric | auto")
      ->capture_default_str();
  analyze->add_flag("--no-log", an_no_log, "Skip the log transform (additive scenes)");
  analyze->add_option("--log-floor", an_floor, "Clamp before the log")->capture_default_str();
  analyze->add_option("--combine", an_combine, "euclid:OTHER_MANIFEST");
  analyze->add_flag("--combine-after-log", an_combine_after_log,
                    "Combine log-images instead of raw intensities");
  analyze->add_option("--quantile", an_quantiles, "Quantiles for selection masks (comma list)")
      ->capture_default_str();
  analyze->add_option("--table-quantiles", an_table,
                      "Quantile grid of report.csv (default: 0.50..0.95, 0.99..0.999)");
  analyze->add_option("--mad-k", an_mad_k, "Multiplier of the median+k*MAD rule")
      ->capture_default_str();
  analyze->add_option("--levels", an_levels, "Levels for energy.csv (comma list)")
      ->capture_default_str();
  analyze->add_flag("--pixel-grid", an_pixel, "Screen at pixel resolution (nearest upsampling)");

  // append
  auto* append = app.add_subcommand("append", "Add one image to an analysis state");
  std::string ap_state, ap_image, ap_other, ap_timestamp;
  append->add_option("--state", ap_state, "Directory produced by analyze")->required();
  append->add_option("--image", ap_image, "Raw image to append")->required();
  append->add_option("--other-image", ap_other, "Partner-channel image for combined states");
  append->add_option("--timestamp", ap_timestamp, "ISO-8601 label for timestamped stacks");

  // roc
  auto* roc = app.add_subcommand("roc", "ROC curve of a score map against a truth mask");
  std::string roc_scores, roc_truth, roc_out;
  roc->add_option("--scores", roc_scores, "Score map (WECS1, PGM or CSV)")->required();
  roc->add_option("--truth", roc_truth, "Truth mask (non-zero = changed)")->required();
  roc->add_option("--out", roc_out, "Output CSV")->required();

  // compare
  auto* compare = app.add_subcommand("compare", "Mean AUC of detectors over noisy replicates");
  std::string cmp_scene, cmp_out, cmp_detectors = "wecs-d:db2:2,wecs-t:db2:2,pixel-d,pixel-t,logratio";
  std::size_t cmp_seeds = 10;
  bool cmp_no_timing = false;
  compare->add_option("--scene", cmp_scene, "Directory produced by synth")->required();
  compare->add_option("--detectors", cmp_detectors, "Comma list of detectors")->capture_default_str();
  compare->add_option("--seeds", cmp_seeds, "Number of noise replicates")->capture_default_str();
  compare->add_option("--out", cmp_out, "Output comparison CSV")->required();
  compare->add_flag("--no-timing", cmp_no_timing, "Write time_ms as 0 for reproducible bytes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (show_version) {
      std::cout << version_text();
      return 0;
    }
    if (*synth) {
      pipeline::SynthConfig c;
      c.n = synth_n;
      c.dims = parse_dims(synth_dims);
      c.noise = parse_noise(synth_noise);
      c.seed = synth_seed;
      c.amplitude = synth_amp;
      const auto scene = pipeline::run_synth(c, synth_out);
      std::cout << "wrote " << scene.n << " images, " << count_true(scene.truth)
                << " changed pixels to " << synth_out << "\n";
    } else if (*analyze) {
      pipeline::AnalyzeConfig c;
      c.basis = parse_basis(an_basis);
      c.level = an_level;
      c.boundary = parse_boundary(an_boundary);
      c.apply_log = !an_no_log;
      c.log_floor = an_floor;
      c.mask_quantiles = split_list<double>(an_quantiles);
      if (!an_table.empty()) c.table_quantiles = split_list<double>(an_table);
      c.mad_k = an_mad_k;
      c.energy_levels = split_list<int>(an_levels);
      c.pixel_grid = an_pixel;
      std::optional<fs::path> other;
      if (!an_combine.empty()) {
        if (!an_combine.starts_with("euclid:"))
          fail(ErrorCategory::invalid_argument, "--combine expects euclid:OTHER_MANIFEST");
        other = an_combine.substr(7);
        c.combine = an_combine_after_log ? pipeline::AnalyzeConfig::Combine::euclid_log
                                         : pipeline::AnalyzeConfig::Combine::euclid_raw;
      } else if (an_combine_after_log) {
        fail(ErrorCategory::invalid_argument, "--combine-after-log requires --combine");
      }
      const auto s = pipeline::run_analyze(an_manifest, c, an_out, other);
      std::cout << "analyzed " << s.coeffs.n() << " images on a " << to_string(s.coeffs.grid_dims())
                << " coefficient grid into " << an_out << "\n";
    } else if (*append) {
      std::optional<fs::path> other;
      if (!ap_other.empty()) other = ap_other;
      const auto s = pipeline::run_append(ap_state, ap_image, other, ap_timestamp);
      std::cout << "state now holds " << s.coeffs.n() << " images\n";
    } else if (*roc) {
      const Matrix scores = io::read_image(roc_scores);
      const Mask truth = io::read_mask(roc_truth);
      const RocCurve curve = roc_curve(scores, truth);
      io::write_file_atomic(roc_out, pipeline::roc_csv(curve));
      std::cout << "auc=" << io::format_double(curve.auc) << "\n";
    } else if (*compare) {
      std::vector<DetectorSpec> dets;
      for (const auto& w : split_words(cmp_detectors)) dets.push_back(parse_detector(w));
      const auto rows = pipeline::run_compare(cmp_scene, dets, cmp_seeds, cmp_out, !cmp_no_timing);
      for (const auto& r : rows)
        std::printf("%-18s mean_auc=%.4f time_ms=%.2f\n", r.detector.c_str(), r.mean_auc, r.time_ms);
    } else {
      std::cerr << app.help();
      return 2;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
