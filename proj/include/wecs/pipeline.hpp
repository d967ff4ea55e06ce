#pragma once

// End-to-end pipelines behind the command-line tool: scene synthesis, stack
// analysis with a resumable on-disk state, streaming appends and detector
// comparisons. Every output set is staged and moved into place only once it
// has been fully produced.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wecs/change_series.hpp"
#include "wecs/dwt.hpp"
#include "wecs/evalharness.hpp"
#include "wecs/io.hpp"
#include "wecs/rng.hpp"
#include "wecs/screening.hpp"
#include "wecs/synthgen.hpp"

namespace wecs::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kStateVersion = "wecs-state/1";
inline constexpr const char* kSceneVersion = "wecs-scene/1";

// Files destined for one output directory, committed together.
class OutputSet {
 public:
  void add(const fs::path& relative, std::string bytes) {
    files_.emplace_back(relative, std::move(bytes));
  }
  void add_matrix(const fs::path& relative, const Matrix& m, io::MatrixFormat format) {
    switch (format) {
      case io::MatrixFormat::wecs1: add(relative, io::encode_wecs1(m)); break;
      case io::MatrixFormat::csv: add(relative, io::encode_csv(m)); break;
      case io::MatrixFormat::pgm: {
        io::PgmScale s;
        std::string bytes = io::encode_pgm(m, &s);
        add(fs::path(relative.string() + ".scale"), io::encode_scale_sidecar(s));
        add(relative, std::move(bytes));
        break;
      }
    }
  }
  void add_mask(const fs::path& relative, const Mask& mask) {
    std::string out = io::pgm_header(mask.dims(), 255);
    for (unsigned char v : mask.flat()) out.push_back(static_cast<char>(v ? 255 : 0));
    add(relative, std::move(out));
  }

  const std::vector<std::pair<fs::path, std::string>>& files() const { return files_; }

  // Writes everything under a staging directory inside `dir`, then renames
  // each file into place. On failure nothing new is left behind.
  void commit(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCategory::io, "cannot create output directory '" + dir.string() + "'");
    const fs::path staging = dir / ".wecs-staging";
    fs::remove_all(staging, ec);
    try {
      for (const auto& [rel, bytes] : files_) {
        fs::create_directories((staging / rel).parent_path());
        io::write_file_atomic(staging / rel, bytes);
      }
      for (const auto& [rel, bytes] : files_) {
        fs::create_directories((dir / rel).parent_path());
        if (fs::is_directory(dir / rel))
          fail(ErrorCategory::io, "output path '" + (dir / rel).string() + "' is a directory");
      }
      for (const auto& [rel, bytes] : files_) fs::rename(staging / rel, dir / rel);
    } catch (const fs::filesystem_error& e) {
      fs::remove_all(staging, ec);
      fail(ErrorCategory::io, std::string("committing outputs failed: ") + e.what());
    } catch (...) {
      fs::remove_all(staging, ec);
      throw;
    }
    fs::remove_all(staging, ec);
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

inline std::string quantile_label(double q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", q);
  return buf;
}

// ---------------------------------------------------------------- analyze --

struct AnalyzeConfig {
  Basis basis = Basis::db2;
  int level = 2;
  Boundary boundary = Boundary::automatic;
  bool apply_log = true;
  double log_floor = kDefaultLogFloor;
  std::vector<double> mask_quantiles{0.99};
  std::vector<double> table_quantiles = default_quantile_grid();
  double mad_k = 2.0;
  std::vector<int> energy_levels{1, 2, 3, 4};
  bool pixel_grid = false;
  // Channel combination: none, or Euclidean before / after the log.
  enum class Combine { none, euclid_raw, euclid_log } combine = Combine::none;
};

inline ordered_json config_to_json(const AnalyzeConfig& c) {
  ordered_json j;
  j["basis"] = basis_name(c.basis);
  j["level"] = c.level;
  j["boundary"] = boundary_name(c.boundary);
  j["apply_log"] = c.apply_log;
  j["log_floor"] = c.log_floor;
  j["mask_quantiles"] = c.mask_quantiles;
  j["table_quantiles"] = c.table_quantiles;
  j["mad_k"] = c.mad_k;
  j["energy_levels"] = c.energy_levels;
  j["pixel_grid"] = c.pixel_grid;
  j["combine"] = c.combine == AnalyzeConfig::Combine::none         ? "none"
                 : c.combine == AnalyzeConfig::Combine::euclid_raw ? "euclid"
                                                                   : "euclid-after-log";
  return j;
}

inline AnalyzeConfig config_from_json(const nlohmann::json& j) {
  AnalyzeConfig c;
  c.basis = parse_basis(j.at("basis").get<std::string>());
  c.level = j.at("level").get<int>();
  c.boundary = parse_boundary(j.at("boundary").get<std::string>());
  c.apply_log = j.at("apply_log").get<bool>();
  c.log_floor = j.at("log_floor").get<double>();
  c.mask_quantiles = j.at("mask_quantiles").get<std::vector<double>>();
  c.table_quantiles = j.at("table_quantiles").get<std::vector<double>>();
  c.mad_k = j.at("mad_k").get<double>();
  c.energy_levels = j.at("energy_levels").get<std::vector<int>>();
  c.pixel_grid = j.at("pixel_grid").get<bool>();
  const auto comb = j.at("combine").get<std::string>();
  c.combine = comb == "none"     ? AnalyzeConfig::Combine::none
              : comb == "euclid" ? AnalyzeConfig::Combine::euclid_raw
                                 : AnalyzeConfig::Combine::euclid_log;
  return c;
}

// Raw image(s) of one acquisition -> the single image that gets transformed.
inline Matrix prepare_image(const AnalyzeConfig& c, const Matrix& raw,
                            const Matrix* other = nullptr) {
  using Combine = AnalyzeConfig::Combine;
  if (c.combine != Combine::none && other == nullptr)
    fail(ErrorCategory::invalid_argument, "channel combination needs a second image");
  switch (c.combine) {
    case Combine::none: return c.apply_log ? log_image(raw, c.log_floor) : raw;
    case Combine::euclid_raw: {
      const Matrix comb = combine_euclid(raw, *other);
      return c.apply_log ? log_image(comb, c.log_floor) : comb;
    }
    case Combine::euclid_log:
      if (!c.apply_log) return combine_euclid(raw, *other);
      return combine_euclid(log_image(raw, c.log_floor), log_image(*other, c.log_floor));
  }
  return raw;
}

// Energy share of the level-J approximation for each requested level.
inline std::vector<double> energy_fractions(const Matrix& image, const FilterBank& bank,
                                            const std::vector<int>& levels, Boundary boundary) {
  std::vector<double> out;
  out.reserve(levels.size());
  for (int J : levels) out.push_back(approx_energy_fraction(image, bank, J, boundary));
  return out;
}

// Stack state that survives between runs: the coefficient grids, per-image
// energy fractions and timestamps.
struct AnalysisState {
  AnalyzeConfig config;
  CoeffStack coeffs;
  std::vector<std::vector<double>> energy;  // [image][level]
  std::vector<std::string> timestamps;
  Channel channel = Channel::generic;

  void add_prepared(const Matrix& image, const FilterBank& bank, const std::string& timestamp) {
    if (coeffs.n() > 0 && timestamps.empty() != timestamp.empty())
      fail(ErrorCategory::invalid_argument, timestamps.empty()
                                                ? "stack has no timestamps; cannot add one now"
                                                : "stack is timestamped; the new image needs one");
    if (!timestamps.empty() && !(timestamps.back() < timestamp))
      fail(ErrorCategory::invalid_argument,
           "timestamp " + timestamp + " does not follow " + timestamps.back());
    if (!timestamp.empty()) timestamps.push_back(timestamp);
    energy.push_back(energy_fractions(image, bank, config.energy_levels, config.boundary));
    coeffs.push_image(image, bank);
  }
};

inline AnalysisState start_state(const AnalyzeConfig& config, Dims dims) {
  const FilterBank bank = build_filter_bank(config.basis);
  require_feasible_level(dims, bank, config.level);
  for (int J : config.energy_levels) require_feasible_level(dims, bank, J);
  for (double q : config.mask_quantiles) ThresholdSpec::quantile(q).validate();
  for (double q : config.table_quantiles) ThresholdSpec::quantile(q).validate();
  AnalysisState s;
  s.config = config;
  s.coeffs = CoeffStack(config.basis, config.level, config.boundary, dims);
  return s;
}

struct Analysis {
  ChangeSignal d, t;
  CorrelationMap map_d, map_t;  // on the screening grid
  ScreeningReport report;
  EnergyApportionment apportion;
  std::vector<double> mean_energy;  // per configured level
};

inline Analysis analyze_state(const AnalysisState& s) {
  const auto& cs = s.coeffs;
  if (cs.n() < 4)
    fail(ErrorCategory::invalid_argument,
         "analysis needs at least 4 images (t-series correlations need 3 transitions), got " +
             std::to_string(cs.n()));
  Analysis a;
  const auto cube_d = deviation_cube(cs);
  const auto cube_t = transition_cube(cs);
  a.d = change_signal(cube_d);
  a.t = change_signal(cube_t);
  a.map_d = correlation_map(cube_d, a.d);
  a.map_t = correlation_map(cube_t, a.t);
  if (s.config.pixel_grid) {
    a.map_d = upsample_correlation_map(a.map_d, cs.level(), cs.source_dims());
    a.map_t = upsample_correlation_map(a.map_t, cs.level(), cs.source_dims());
  }
  std::vector<ThresholdSpec> specs;
  for (double q : s.config.mask_quantiles) specs.push_back(ThresholdSpec::quantile(q));
  a.report = screening_report(a.map_d, a.map_t, a.d, a.t, s.config.table_quantiles, specs,
                              s.config.mad_k);
  a.apportion = energy_apportionment(cs);
  a.mean_energy.assign(s.config.energy_levels.size(), 0.0);
  for (std::size_t l = 0; l < a.mean_energy.size(); ++l) {
    CompensatedSum acc;
    for (const auto& row : s.energy) acc.add(row[l]);
    a.mean_energy[l] = acc.value() / static_cast<double>(s.energy.size());
  }
  return a;
}

inline std::string flags_csv(const TimeFlags& fd, const ChangeSignal& d, const TimeFlags& ft,
                             const ChangeSignal& t) {
  std::string out = "kind,index,value,median,mad,threshold,flagged\n";
  auto emit = [&](const char* kind, const TimeFlags& f, const ChangeSignal& s) {
    for (std::size_t m = 0; m < s.length(); ++m) {
      const bool flagged = std::find(f.flagged.begin(), f.flagged.end(), m) != f.flagged.end();
      out += std::string(kind) + "," + std::to_string(m + 1) + "," + io::format_double(s.values[m]) +
             "," + io::format_double(f.median) + "," + io::format_double(f.mad) + "," +
             io::format_double(f.threshold()) + "," + (flagged ? "1" : "0") + "\n";
    }
  };
  emit("d", fd, d);
  emit("t", ft, t);
  return out;
}

inline std::string report_csv(const ScreeningReport& rep) {
  std::string out = "quantile,tau_d,count_d,tau_t,count_t,count_union\n";
  for (const auto& r : rep.rows)
    out += quantile_label(r.quantile) + "," + io::format_double(r.tau_d) + "," +
           std::to_string(r.count_d) + "," + io::format_double(r.tau_t) + "," +
           std::to_string(r.count_t) + "," + std::to_string(r.count_union) + "\n";
  return out;
}

inline Matrix abs_values(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.flat()) v = std::abs(v);
  return out;
}

inline void add_analysis_outputs(OutputSet& out, const AnalysisState& s, const Analysis& a) {
  out.add("d.csv", io::encode_series_csv(a.d.values));
  out.add("t.csv", io::encode_series_csv(a.t.values));
  out.add_matrix("corr_d.csv", a.map_d.values, io::MatrixFormat::csv);
  out.add_matrix("corr_t.csv", a.map_t.values, io::MatrixFormat::csv);
  out.add_matrix("corr_d.pgm", abs_values(a.map_d.values), io::MatrixFormat::pgm);
  out.add_matrix("corr_t.pgm", abs_values(a.map_t.values), io::MatrixFormat::pgm);
  out.add("report.csv", report_csv(a.report));
  for (const auto& sel : a.report.selections) {
    const std::string q = quantile_label(sel.spec.value);
    out.add_mask("mask_d_q" + q + ".pgm", sel.d.indices);
    out.add_mask("mask_t_q" + q + ".pgm", sel.t.indices);
    out.add_mask("mask_union_q" + q + ".pgm", sel.both.indices);
  }
  out.add("flags.csv", flags_csv(a.report.flags_d, a.d, a.report.flags_t, a.t));
  std::string energy = "level,mean_fraction\n";
  for (std::size_t l = 0; l < a.mean_energy.size(); ++l)
    energy += std::to_string(s.config.energy_levels[l]) + "," + io::format_double(a.mean_energy[l]) + "\n";
  out.add("energy.csv", energy);
  out.add("apportionment.csv",
          "total,mean_term,deviation_term,residual\n" + io::format_double(a.apportion.total) + "," +
              io::format_double(a.apportion.mean_term) + "," +
              io::format_double(a.apportion.deviation_term) + "," +
              io::format_double(a.apportion.residual) + "\n");
}

inline std::string coeff_file_name(std::size_t m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "coeff_%05zu.wecs1", m + 1);
  return buf;
}

inline std::string state_json(const AnalysisState& s) {
  ordered_json j;
  j["format"] = kStateVersion;
  j["config"] = config_to_json(s.config);
  j["source_rows"] = s.coeffs.source_dims().rows;
  j["source_cols"] = s.coeffs.source_dims().cols;
  j["channel"] = channel_name(s.channel);
  j["n"] = s.coeffs.n();
  j["timestamps"] = s.timestamps;
  j["coeff_files"] = ordered_json::array();
  for (std::size_t m = 0; m < s.coeffs.n(); ++m) j["coeff_files"].push_back(coeff_file_name(m));
  ordered_json energy = ordered_json::array();
  for (const auto& row : s.energy) {
    ordered_json r = ordered_json::array();
    for (double v : row) r.push_back(io::format_double(v));
    energy.push_back(std::move(r));
  }
  j["energy_fractions"] = std::move(energy);
  return j.dump(2) + "\n";
}

// Coefficient files in [first, n) plus the state document.
inline void add_state_outputs(OutputSet& out, const AnalysisState& s, std::size_t first) {
  for (std::size_t m = first; m < s.coeffs.n(); ++m)
    out.add(fs::path("state") / coeff_file_name(m), io::encode_wecs1(s.coeffs[m]));
  out.add(fs::path("state") / "state.json", state_json(s));
}

inline AnalysisState load_state(const fs::path& dir) {
  const fs::path path = dir / "state" / "state.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCategory::format, path.string() + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  try {
    if (j.at("format").get<std::string>() != kStateVersion)
      fail(ErrorCategory::format, path.string() + ": unsupported state format");
    const AnalyzeConfig config = config_from_json(j.at("config"));
    const Dims dims{j.at("source_rows").get<std::size_t>(), j.at("source_cols").get<std::size_t>()};
    AnalysisState s = start_state(config, dims);
    s.channel = parse_channel(j.at("channel").get<std::string>());
    s.timestamps = j.at("timestamps").get<std::vector<std::string>>();
    for (const auto& f : j.at("coeff_files"))
      s.coeffs.push_coeffs(io::read_image(dir / "state" / f.get<std::string>()));
    for (const auto& row : j.at("energy_fractions")) {
      std::vector<double> r;
      for (const auto& v : row) r.push_back(std::stod(v.get<std::string>()));
      s.energy.push_back(std::move(r));
    }
    if (s.coeffs.n() != j.at("n").get<std::size_t>() || s.energy.size() != s.coeffs.n())
      fail(ErrorCategory::format, path.string() + ": state is inconsistent");
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::format, path.string() + ": malformed state: " + e.what());
  }
}

// Source of raw acquisitions: image m (0-based), plus the partner channel
// when combining.
struct RawFrame {
  Matrix image;
  std::optional<Matrix> other;
  std::string timestamp;
};
using FrameSource = std::function<RawFrame(std::size_t)>;

// Streams n frames through preprocessing and the transform; raw images are
// not retained.
inline AnalysisState build_state(const AnalyzeConfig& config, Dims dims, std::size_t n,
                                 const FrameSource& source, Channel channel = Channel::generic) {
  AnalysisState s = start_state(config, dims);
  s.channel = channel;
  const FilterBank bank = build_filter_bank(config.basis);
  for (std::size_t m = 0; m < n; ++m) {
    RawFrame f = source(m);
    require_same_dims(f.image.dims(), dims, "stack image " + std::to_string(m + 1));
    const Matrix prepared = prepare_image(config, f.image, f.other ? &*f.other : nullptr);
    s.add_prepared(prepared, bank, f.timestamp);
  }
  return s;
}

inline FrameSource manifest_source(const io::StackManifest& main,
                                   const io::StackManifest* other) {
  return [&main, other](std::size_t m) {
    RawFrame f;
    f.image = io::read_image(main.resolve(main.entries[m]));
    f.timestamp = main.entries[m].timestamp;
    if (other) f.other = io::read_image(other->resolve(other->entries[m]));
    return f;
  };
}

inline AnalysisState run_analyze(const fs::path& manifest_path, const AnalyzeConfig& config,
                                 const fs::path& out_dir,
                                 const std::optional<fs::path>& other_manifest = std::nullopt) {
  const auto main = io::load_manifest(manifest_path);
  std::optional<io::StackManifest> other;
  if (config.combine != AnalyzeConfig::Combine::none) {
    if (!other_manifest)
      fail(ErrorCategory::invalid_argument, "channel combination needs a second manifest");
    other = io::load_manifest(*other_manifest);
    if (other->entries.size() != main.entries.size())
      fail(ErrorCategory::dimension_mismatch, "combined manifests differ in length");
  }
  const Dims dims = io::read_image(main.resolve(main.entries.front())).dims();
  const Channel channel = config.combine != AnalyzeConfig::Combine::none ? Channel::combined
                          : main.entries.front().channel.empty()
                              ? Channel::generic
                              : parse_channel(main.entries.front().channel);
  AnalysisState s = build_state(config, dims, main.entries.size(),
                                manifest_source(main, other ? &*other : nullptr), channel);
  const Analysis a = analyze_state(s);
  OutputSet out;
  add_analysis_outputs(out, s, a);
  add_state_outputs(out, s, 0);
  out.commit(out_dir);
  return s;
}

inline AnalysisState run_append(fs::path state_dir, const fs::path& image_path,
                                const std::optional<fs::path>& other_image = std::nullopt,
                                const std::string& timestamp = {}) {
  // Accept the state/ subdirectory as well as the analysis directory.
  state_dir = state_dir.lexically_normal();
  if (!state_dir.has_filename()) state_dir = state_dir.parent_path();
  if (fs::exists(state_dir / "state.json") && !fs::exists(state_dir / "state" / "state.json"))
    state_dir = state_dir.parent_path().empty() ? fs::path(".") : state_dir.parent_path();
  AnalysisState s = load_state(state_dir);
  const std::size_t before = s.coeffs.n();
  const Matrix raw = io::read_image(image_path);
  std::optional<Matrix> other;
  if (other_image) other = io::read_image(*other_image);
  const Matrix prepared = prepare_image(s.config, raw, other ? &*other : nullptr);
  s.add_prepared(prepared, build_filter_bank(s.config.basis), timestamp);
  const Analysis a = analyze_state(s);
  OutputSet out;
  add_analysis_outputs(out, s, a);
  add_state_outputs(out, s, before);
  out.commit(state_dir);
  return s;
}

// ------------------------------------------------------------------ synth --

struct SynthConfig {
  std::size_t n = 4;
  Dims dims{256, 256};
  NoiseModel noise = NoiseModel::gamma(4.0);
  std::uint64_t seed = 1;
  double amplitude = 2.0;
};

inline ordered_json ellipse_to_json(const EllipseSpec& e) {
  ordered_json j;
  j["row"] = e.row;
  j["col"] = e.col;
  j["a"] = e.a;
  j["b"] = e.b;
  j["rotation"] = e.rotation;
  j["amplitude"] = e.amplitude;
  j["onset"] = e.onset;
  return j;
}

inline EllipseSpec ellipse_from_json(const nlohmann::json& j) {
  return {j.at("row").get<double>(),      j.at("col").get<double>(),
          j.at("a").get<double>(),        j.at("b").get<double>(),
          j.at("rotation").get<double>(), j.at("amplitude").get<double>(),
          j.at("onset").get<int>()};
}

struct SceneDescription {
  Dims dims;
  std::size_t n = 0;
  std::vector<EllipseSpec> base, changes;
  NoiseModel noise;
  std::uint64_t seed = 0;
};

inline SceneDescription load_scene_description(const fs::path& dir) {
  const fs::path path = dir / "scene.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
    if (j.at("format").get<std::string>() != kSceneVersion)
      fail(ErrorCategory::format, path.string() + ": unsupported scene format");
    SceneDescription d;
    d.dims = {j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>()};
    d.n = j.at("n").get<std::size_t>();
    for (const auto& e : j.at("base")) d.base.push_back(ellipse_from_json(e));
    for (const auto& e : j.at("changes")) d.changes.push_back(ellipse_from_json(e));
    d.noise = parse_noise(j.at("noise").get<std::string>());
    d.seed = j.at("seed").get<std::uint64_t>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::format, path.string() + ": malformed scene description: " + e.what());
  }
}

inline SceneSequence run_synth(const SynthConfig& c, const fs::path& out_dir) {
  c.noise.validate();
  const auto base = paper_like_base(c.dims, c.amplitude);
  const auto changes = paper_like_changes(c.dims, c.amplitude);
  SceneSequence scene = gen_ellipse_scene(c.dims, base, changes, c.n);
  OutputSet out;
  io::StackManifest manifest;
  for (std::size_t m = 0; m < c.n; ++m) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%04zu.wecs1", m + 1);
    out.add(name, io::encode_wecs1(speckle_image(scene.images.images[m], c.noise, c.seed, m)));
    manifest.entries.push_back({name, "", "generic"});
  }
  out.add("manifest.json", io::encode_manifest(manifest));
  out.add_mask("truth.pgm", scene.truth);
  for (std::size_t i = 0; i < scene.per_step.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "truth_step_%04zu.pgm", i + 2);
    out.add_mask(name, scene.per_step[i]);
  }
  ordered_json j;
  j["format"] = kSceneVersion;
  j["rows"] = c.dims.rows;
  j["cols"] = c.dims.cols;
  j["n"] = c.n;
  j["noise"] = noise_to_string(c.noise);
  j["seed"] = c.seed;
  j["generator"] = kGeneratorVersion;
  j["base"] = ordered_json::array();
  for (const auto& e : base) j["base"].push_back(ellipse_to_json(e));
  j["changes"] = ordered_json::array();
  for (const auto& e : changes) j["changes"].push_back(ellipse_to_json(e));
  out.add("scene.json", j.dump(2) + "\n");
  out.commit(out_dir);
  return scene;
}

// ---------------------------------------------------------------- compare --

inline std::string sanitize_id(std::string id) {
  for (char& ch : id)
    if (ch == '/' || ch == ':') ch = '_';
  return id;
}

inline std::string roc_csv(const RocCurve& roc) {
  std::string out = "threshold,fpr,tpr\n";
  for (std::size_t k = 0; k < roc.thresholds.size(); ++k)
    out += io::format_double(roc.thresholds[k]) + "," + io::format_double(roc.fpr[k]) + "," +
           io::format_double(roc.tpr[k]) + "\n";
  return out;
}

inline std::vector<ComparisonRow> run_compare(const fs::path& scene_dir,
                                              const std::vector<DetectorSpec>& detectors,
                                              std::size_t seed_count, const fs::path& out_csv,
                                              bool record_timing = true) {
  if (seed_count == 0) fail(ErrorCategory::invalid_argument, "need at least one seed");
  const auto desc = load_scene_description(scene_dir);
  const auto scene = gen_ellipse_scene(desc.dims, desc.base, desc.changes, desc.n);
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < seed_count; ++k) seeds.push_back(desc.seed + k);
  auto rows = run_comparison(scene, detectors, seeds, desc.noise);

  OutputSet out;
  std::string table = "detector,mean_auc,time_ms,score_truth_corr\n";
  for (const auto& r : rows) {
    char t[32];
    std::snprintf(t, sizeof t, "%.3f", record_timing ? r.time_ms : 0.0);
    table += r.detector + "," + io::format_double(r.mean_auc) + "," + t + "," +
             io::format_double(r.score_truth_corr) + "\n";
  }
  out.add(out_csv.filename(), table);
  for (const auto& r : rows) out.add("roc_" + sanitize_id(r.detector) + ".csv", roc_csv(r.mean_roc));
  const fs::path dir = out_csv.parent_path().empty() ? fs::path(".") : out_csv.parent_path();
  out.commit(dir);
  return rows;
}

}  // namespace wecs::pipeline
