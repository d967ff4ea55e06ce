#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "wecs/pipeline.hpp"
#include "wecs/screening.hpp"

using namespace wecs;
using Catch::Matchers::WithinAbs;

namespace {

DeviationCube random_cube(SeriesKind kind, std::size_t n, Dims grid, std::uint64_t seed) {
  DeviationCube c{kind, {}};
  for (std::size_t m = 0; m < n; ++m)
    c.entries.push_back(oracle::random_matrix(grid.rows, grid.cols, seed * 100 + m, 0.0, 4.0));
  return c;
}

ChangeSignal random_signal(SeriesKind kind, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ChangeSignal s{kind, {}};
  for (std::size_t m = 0; m < n; ++m) s.values.push_back(rng.uniform(0.0, 10.0));
  return s;
}

// Correlation map with p distinct |R| values (k+1)/(p+1) in shuffled order
// and random signs.
CorrelationMap distinct_map(Dims grid, std::uint64_t seed, SeriesKind kind = SeriesKind::d) {
  const std::size_t p = grid.size();
  std::vector<double> v(p);
  for (std::size_t k = 0; k < p; ++k) v[k] = static_cast<double>(k + 1) / static_cast<double>(p + 1);
  Rng rng(seed);
  for (std::size_t k = p - 1; k > 0; --k) std::swap(v[k], v[rng.below(k + 1)]);
  CorrelationMap map{kind, Matrix(grid.rows, grid.cols, std::move(v)), Mask(grid, 0)};
  for (double& x : map.values.flat())
    if (rng.below(2)) x = -x;
  return map;
}

SelectionMask mask_from(const std::vector<std::size_t>& idx, Dims grid) {
  SelectionMask m;
  m.indices = Mask(grid, 0);
  for (auto i : idx) m.indices.flat()[i] = 1;
  m.count = idx.size();
  return m;
}

}  // namespace

TEST_CASE("correlation_map trivial cases") {
  // one coefficient: the cube entry is the signal itself
  const auto cube = random_cube(SeriesKind::d, 6, {1, 1}, 1);
  const auto map = correlation_map(cube, change_signal(cube));
  CHECK_THAT(map.values(0, 0), WithinAbs(1.0, 1e-15));
  CHECK(map.degenerate(0, 0) == 0);

  auto c2 = random_cube(SeriesKind::t, 5, {3, 3}, 2);
  for (auto& e : c2.entries) e(1, 2) = 0.75;
  const auto m2 = correlation_map(c2, random_signal(SeriesKind::t, 5, 3));
  CHECK(m2.values(1, 2) == 0.0);
  CHECK(m2.degenerate(1, 2) == 1);
  CHECK(m2.non_degenerate_count() == 8);

  ChangeSignal flat{SeriesKind::t, std::vector<double>(5, 2.0)};
  const auto m3 = correlation_map(c2, flat);
  CHECK(m3.non_degenerate_count() == 0);
  CHECK(oracle::max_abs(m3.values) == 0.0);
}

TEST_CASE("correlation_map matches the two-pass oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cube = random_cube(SeriesKind::d, 12, {8, 8}, 10 + seed);
    const auto signal = random_signal(SeriesKind::d, 12, 20 + seed);
    const auto map = correlation_map(cube, signal);
    for (std::size_t i = 0; i < 64; ++i) {
      std::vector<double> x;
      for (const auto& e : cube.entries) x.push_back(e.flat()[i]);
      CHECK_THAT(map.values.flat()[i], WithinAbs(oracle::pearson(x, signal.values), 1e-12));
      CHECK(std::abs(map.values.flat()[i]) <= 1.0);
    }
  }
}

TEST_CASE("correlation_map rejects mismatches") {
  const auto cube = random_cube(SeriesKind::d, 4, {2, 2}, 3);
  CHECK_THROWS_AS(correlation_map(cube, random_signal(SeriesKind::t, 4, 1)), Error);
  CHECK_THROWS_AS(correlation_map(cube, random_signal(SeriesKind::d, 5, 1)), Error);
  const auto short_cube = random_cube(SeriesKind::d, 2, {2, 2}, 3);
  CHECK_THROWS_AS(correlation_map(short_cube, random_signal(SeriesKind::d, 2, 1)), Error);
}

TEST_CASE("pixel-grid correlation equals correlating upsampled cubes") {
  const auto cube = random_cube(SeriesKind::d, 6, {5, 4}, 4);
  const auto signal = random_signal(SeriesKind::d, 6, 5);
  const Dims target{18, 15};
  DeviationCube up{SeriesKind::d, {}};
  for (const auto& e : cube.entries) up.entries.push_back(upsample_nearest(e, 2, target));
  const auto direct = correlation_map(up, signal);
  const auto via_map = upsample_correlation_map(correlation_map(cube, signal), 2, target);
  CHECK(oracle::max_abs_diff(direct.values, via_map.values) < 1e-15);
  CHECK(direct.degenerate == via_map.degenerate);
}

TEST_CASE("select_indices thresholds") {
  const auto map = distinct_map({40, 25}, 6);
  auto sel = select_indices(map, ThresholdSpec::absolute(1.0));
  CHECK(sel.count == 0);
  sel = select_indices(map, ThresholdSpec::absolute(0.0));
  CHECK(sel.count == 1000);
  CHECK(sel.source == SelectionSource::d);
  sel = select_indices(map, ThresholdSpec::quantile(0.9));
  CHECK(sel.count == 100);
  CHECK(count_true(sel.indices) == sel.count);

  CHECK_THROWS_AS(select_indices(map, ThresholdSpec::quantile(1.0)), Error);
  CHECK_THROWS_AS(select_indices(map, ThresholdSpec::absolute(-0.1)), Error);

  CorrelationMap dead{SeriesKind::t, Matrix(3, 3, 0.0), Mask(3, 3, 1)};
  CHECK_THROWS_AS(select_indices(dead, ThresholdSpec::quantile(0.5)), Error);
}

TEST_CASE("quantile selection on a large grid") {
  const auto map = distinct_map({1200, 1000}, 7);
  CHECK(select_indices(map, ThresholdSpec::quantile(0.99)).count == 12000);
  CHECK(select_indices(map, ThresholdSpec::quantile(0.999)).count == 1200);
  CHECK(select_indices(map, ThresholdSpec::quantile(0.5)).count == 600000);
}

TEST_CASE("quantile count law") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Rng rng(seed + 50);
    const Dims grid{17 + rng.below(30), 11 + rng.below(30)};
    auto map = distinct_map(grid, seed + 60);
    // knock out some entries
    for (std::size_t i = 0; i < map.values.size(); i += 7) {
      map.values.flat()[i] = 0.0;
      map.degenerate.flat()[i] = 1;
    }
    const double p = static_cast<double>(map.non_degenerate_count());
    for (double q : {0.0, 0.1, 0.37, 0.5, 0.9, 0.95, 0.99}) {
      const auto sel = select_indices(map, ThresholdSpec::quantile(q));
      const double expect = std::floor((1.0 - q) * p);
      CHECK(std::abs(static_cast<double>(sel.count) - expect) <= 1.0);
      for (std::size_t i = 0; i < map.values.size(); i += 7) CHECK(sel.indices.flat()[i] == 0);
    }
  }
}

TEST_CASE("selection masks are nested in the threshold") {
  const auto map = distinct_map({30, 30}, 8);
  SelectionMask prev = select_indices(map, ThresholdSpec::absolute(0.0));
  for (double tau = 0.05; tau < 1.0; tau += 0.05) {
    const auto cur = select_indices(map, ThresholdSpec::absolute(tau));
    for (std::size_t i = 0; i < cur.indices.size(); ++i)
      if (cur.indices.flat()[i]) CHECK(prev.indices.flat()[i]);
    prev = cur;
  }
}

TEST_CASE("union_selection") {
  const Dims g{4, 5};
  const auto a = mask_from({0, 3, 7}, g);
  const auto b = mask_from({1, 2, 4, 19}, g);
  CHECK(union_selection(a, b).count == 7);
  const auto aa = union_selection(a, a);
  CHECK(aa.indices == a.indices);
  CHECK(aa.count == a.count);
  CHECK(aa.source == SelectionSource::union_of);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const Dims grid{20, 30};
    std::vector<std::size_t> ia, ib;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (rng.uniform() < 0.2) ia.push_back(i);
      if (rng.uniform() < 0.3) ib.push_back(i);
    }
    const auto u = union_selection(mask_from(ia, grid), mask_from(ib, grid));
    std::set<std::size_t> sa(ia.begin(), ia.end()), sb(ib.begin(), ib.end()), both;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(both, both.end()));
    CHECK(u.count == sa.size() + sb.size() - both.size());
    std::set<std::size_t> su = sa;
    su.insert(sb.begin(), sb.end());
    CHECK(oracle::as_set(u.indices) == su);
  }
  CHECK_THROWS_AS(union_selection(a, mask_from({}, {5, 4})), Error);
}

TEST_CASE("flag_change_times") {
  const auto f0 = flag_change_times({SeriesKind::d, {3, 3, 3, 3}}, 2.0);
  CHECK(f0.mad == 0.0);
  CHECK(f0.flagged.empty());

  const auto f1 = flag_change_times({SeriesKind::d, {1, 1, 1, 1, 100}}, 2.0);
  CHECK(f1.median == 1.0);
  CHECK(f1.mad == 0.0);
  CHECK(f1.flagged == std::vector<std::size_t>{4});

  const auto f2 = flag_change_times({SeriesKind::t, {0, 1, 2, 3, 4}}, 2.0);
  CHECK(f2.median == 2.0);
  CHECK(f2.mad == 1.0);
  CHECK(f2.threshold() == 4.0);
  CHECK(f2.flagged.empty());

  const auto f3 = flag_change_times({SeriesKind::t, {0, 1, 2, 3, 4}}, 1.5);
  CHECK(f3.flagged == std::vector<std::size_t>{4});
}

TEST_CASE("screening report") {
  CorrelationMap m10{SeriesKind::d, Matrix(2, 5), Mask(2, 5, 0)};
  for (std::size_t i = 0; i < 10; ++i) m10.values.flat()[i] = (i % 2 ? -1.0 : 1.0) * 0.05 * (i + 1);
  auto t10 = m10;
  t10.kind = SeriesKind::t;
  const ChangeSignal d{SeriesKind::d, {1, 2, 3, 4}}, t{SeriesKind::t, {1, 2, 3}};
  const auto rep = screening_report(m10, t10, d, t, {0.5}, {});
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].count_d == 5);
  CHECK(rep.rows[0].count_t == 5);
  CHECK(rep.rows[0].count_union == 5);

  const auto big_d = distinct_map({1200, 1000}, 9);
  const auto big_t = distinct_map({1200, 1000}, 10, SeriesKind::t);
  const auto grid = default_quantile_grid();
  REQUIRE(grid.size() == 20);
  const auto big = screening_report(big_d, big_t, d, t, grid, {ThresholdSpec::quantile(0.99)});
  const std::vector<std::size_t> expect = {600000, 540000, 480000, 420000, 360000, 300000, 240000,
                                           180000, 120000, 60000,  12000,  10800,  9600,   8400,
                                           7200,   6000,   4800,   3600,   2400,   1200};
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(big.rows[i].count_d == expect[i]);
    CHECK(big.rows[i].count_t == expect[i]);
  }
  REQUIRE(big.selections.size() == 1);
  CHECK(big.selections[0].both.count >= 12000);

  const auto again = screening_report(big_d, big_t, d, t, grid, {});
  CHECK(pipeline::report_csv(again) == pipeline::report_csv(big));
}

TEST_CASE("masks are invariant to image scaling") {
  const auto bank = build_filter_bank(Basis::db2);
  ImageStack s;
  for (std::uint64_t m = 0; m < 6; ++m) s.images.push_back(oracle::random_matrix(32, 32, 70 + m));
  ImageStack scaled = s;
  for (auto& img : scaled.images)
    for (double& v : img.flat()) v *= -3.7;
  for (SeriesKind kind : {SeriesKind::d, SeriesKind::t}) {
    auto maps = [&](const ImageStack& st) {
      const auto cs = build_coeff_stack(st, bank, 2, false);
      const auto cube = kind == SeriesKind::d ? deviation_cube(cs) : transition_cube(cs);
      return correlation_map(cube, change_signal(cube));
    };
    const auto a = maps(s), b = maps(scaled);
    CHECK(oracle::max_abs_diff(a.values, b.values) < 1e-9);
    for (double q : {0.5, 0.9, 0.99})
      CHECK(select_indices(a, ThresholdSpec::quantile(q)).indices ==
            select_indices(b, ThresholdSpec::quantile(q)).indices);
  }
}

TEST_CASE("report rows agree with direct selection") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto cube_d = random_cube(SeriesKind::d, 7, {13, 17}, 80 + seed);
    auto cube_t = random_cube(SeriesKind::t, 6, {13, 17}, 90 + seed);
    for (auto& e : cube_t.entries) e(seed, 3) = 1.0;  // one degenerate site
    const auto d = random_signal(SeriesKind::d, 7, 100 + seed);
    const auto t = random_signal(SeriesKind::t, 6, 110 + seed);
    const auto md = correlation_map(cube_d, d), mt = correlation_map(cube_t, t);
    const auto rep = screening_report(md, mt, d, t, default_quantile_grid(), {});
    for (const auto& row : rep.rows) {
      const auto s = screen_both(md, mt, ThresholdSpec::quantile(row.quantile));
      CHECK(row.tau_d == s.d.tau);
      CHECK(row.tau_t == s.t.tau);
      CHECK(row.count_d == s.d.count);
      CHECK(row.count_t == s.t.count);
      CHECK(row.count_union == s.both.count);
    }
  }
}
