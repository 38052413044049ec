#include <cmath>

#include "doctest.h"
#include "octskin/phantom.hpp"
#include "octskin/woundquant.hpp"
#include "test_support.hpp"

using namespace octskin;
using namespace octskin::testing;

namespace {

// Epidermis band rows [top, top+thick) across all columns, with optional gap columns.
LabelMask banded(int h, int w, int top, int thick, int gap_begin = 0, int gap_end = 0) {
  LabelMask m(h, w, 0);
  for (int c = 0; c < w; ++c) {
    for (int r = top; r < top + thick; ++r) m(r, c) = (c >= gap_begin && c < gap_end) ? 0 : 1;
    for (int r = top + thick; r < h; ++r) m(r, c) = 2;
  }
  return m;
}

LabelMask mirrored(const LabelMask& m) {
  LabelMask out(m.labels.height(), m.labels.width());
  const int w = m.labels.width();
  for (int r = 0; r < m.labels.height(); ++r)
    for (int c = 0; c < w; ++c) out(r, c) = m(r, w - 1 - c);
  return out;
}

}  // namespace

TEST_CASE("uniform band thickness") {
  const ThicknessProfile tp = layer_thickness(banded(40, 30, 5, 10), 10.0);
  for (double v : tp.per_column_um[1]) CHECK(v == doctest::Approx(100.0));
  CHECK(*tp.mean_um[1] == doctest::Approx(100.0));
  CHECK(*tp.std_um[1] == doctest::Approx(0.0));
  for (double v : tp.per_column_um[3]) CHECK(v == 0.0);
  CHECK_FALSE(tp.mean_um[3].has_value());
  CHECK_FALSE(tp.std_um[3].has_value());
  CHECK_THROWS_AS(layer_thickness(banded(40, 30, 5, 10), 0.0), ParameterError);
}

TEST_CASE("thickness matches the phantom generator geometry exactly") {
  PhantomSpec spec;
  spec.height_px = 128;
  spec.width_px = 96;
  spec.top_margin_px = 20;
  spec.layer_mean_thickness_px = {12, 40, 30};
  spec.wound_halfwidth_frac = 0.2;
  spec.seed = 17;
  const Phantom ph = generate_phantom(spec);
  const double axial = spec.spacing.axial_um_per_px;
  const ThicknessProfile tp = layer_thickness(ph.mask, axial);
  for (int x = 0; x < spec.width_px; ++x) {
    const auto& b = ph.geometry.boundaries[x];
    const bool wound = ph.geometry.wound_columns[x];
    const int epi = wound ? 0 : b[1] - b[0];
    REQUIRE(tp.per_column_um[1][x] == epi * axial);
    REQUIRE(tp.per_column_um[2][x] == (b[2] - b[1]) * axial);
    REQUIRE(tp.per_column_um[3][x] == (b[3] - b[2]) * axial);
    REQUIRE(tp.per_column_um[0][x] == (spec.height_px - b[3] + b[0] + (wound ? b[1] - b[0] : 0)) * axial);
  }
  // Mean over present columns agrees with the per-column values.
  double sum = 0;
  int n = 0;
  for (double v : tp.per_column_um[1])
    if (v > 0) sum += v, ++n;
  CHECK(*tp.mean_um[1] == doctest::Approx(sum / n));
}

TEST_CASE("wound extent of no-wound and half-width phantoms") {
  PhantomSpec spec;
  spec.height_px = 96;
  spec.width_px = 200;
  spec.top_margin_px = 10;
  spec.layer_mean_thickness_px = {10, 30, 30};
  spec.boundary_wobble_px = 3;
  const WoundExtent none = wound_extent(generate_phantom(spec).mask, spec.spacing);
  CHECK(none.width_um == 0.0);
  CHECK(none.area_um2 == 0.0);

  spec.wound_halfwidth_frac = 0.25;
  const Phantom ph = generate_phantom(spec);
  const WoundExtent half = wound_extent(ph.mask, spec.spacing);
  CHECK(half.width_um == doctest::Approx(2500.0));
  CHECK(half.wound_columns == ph.geometry.wound_columns);

  // Area oracle: width times the median intact epidermis thickness.
  std::vector<double> intact;
  for (int x = 0; x < spec.width_px; ++x)
    if (!ph.geometry.wound_columns[x])
      intact.push_back((ph.geometry.boundaries[x][1] - ph.geometry.boundaries[x][0]) * spec.spacing.axial_um_per_px);
  std::sort(intact.begin(), intact.end());
  const double median = (intact[intact.size() / 2 - 1] + intact[intact.size() / 2]) / 2.0;
  REQUIRE(intact.size() % 2 == 0);
  CHECK(*half.reference_epidermis_um == doctest::Approx(median));
  CHECK(half.area_um2 == doctest::Approx(2500.0 * median));
}

TEST_CASE("short epidermis gaps are suppressed") {
  const Spacing sp{10, 25};
  CHECK(wound_extent(banded(30, 40, 4, 6, 10, 11), sp, 3).width_um == 0.0);
  CHECK(wound_extent(banded(30, 40, 4, 6, 10, 12), sp, 3).width_um == 0.0);
  CHECK(wound_extent(banded(30, 40, 4, 6, 10, 13), sp, 3).width_um == doctest::Approx(75.0));
  CHECK(wound_extent(banded(30, 40, 4, 6, 10, 11), sp, 1).width_um == doctest::Approx(25.0));
  // A run touching the border counts like any other.
  CHECK(wound_extent(banded(30, 40, 4, 6, 0, 5), sp, 3).width_um == doctest::Approx(125.0));
  CHECK_THROWS_AS(wound_extent(banded(30, 40, 4, 6), sp, 0), ParameterError);
}

TEST_CASE("a wound with no intact reference column is degenerate") {
  const LabelMask all_gap = banded(30, 40, 4, 6, 0, 40);
  try {
    wound_extent(all_gap, {10, 25});
    FAIL("expected degenerate input");
  } catch (const DegenerateInputError& e) {
    CHECK(std::string(e.what()).find("width") != std::string::npos);
  }
}

TEST_CASE("healing curve closure") {
  auto extent = [](double area) {
    WoundExtent e;
    e.area_um2 = area;
    return e;
  };
  const HealingCurve c = healing_curve({{12, extent(0.018 * 5000)}, {0, extent(5000)}});
  REQUIRE(c.points.size() == 2);
  CHECK(c.points[0].day == 0);
  CHECK(c.points[0].closure_frac == 0.0);
  CHECK(c.points[1].closure_frac == doctest::Approx(0.982));
  CHECK(c.points[1].closure_frac >= 0.98);

  const HealingCurve flat = healing_curve({{0, extent(7)}, {4, extent(7)}, {8, extent(7)}});
  for (const auto& p : flat.points) CHECK(p.closure_frac == 0.0);

  // Growth beyond the baseline clamps to zero closure.
  CHECK(healing_curve({{0, extent(10)}, {3, extent(20)}}).points[1].closure_frac == 0.0);

  CHECK_THROWS_AS(healing_curve({{4, extent(1)}}), ContractError);
  CHECK_THROWS_AS(healing_curve({{0, extent(0)}, {4, extent(0)}}), ContractError);
  CHECK_THROWS_AS(healing_curve({{0, extent(1)}, {0, extent(2)}}), ContractError);
}

TEST_CASE("phantom healing series yields the designed closure fractions") {
  PhantomSpec base;
  base.seed = 3;
  const auto series = generate_healing_series(base, {0.3, 0.285, 0.12, 0.006});
  std::vector<std::pair<int, WoundExtent>> pts;
  for (const auto& hp : series) pts.push_back({hp.day, wound_extent(hp.mask, hp.image.spacing)});
  const HealingCurve curve = healing_curve(pts);
  const std::array<double, 4> expected{0.0, 0.05, 0.60, 0.98};
  for (std::size_t i = 0; i < 4; ++i) CHECK(curve.points[i].closure_frac == doctest::Approx(expected[i]).epsilon(0.02));
  CHECK(curve.points.back().closure_frac >= 0.98);
  CHECK(curve.points[1].day == 4);
}

TEST_CASE("thickness is mirror-invariant") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20; ++t) {
    const LabelMask m = random_mask(20, 25, rng);
    const ThicknessProfile a = layer_thickness(m, 7.5), b = layer_thickness(mirrored(m), 7.5);
    for (int k = 0; k < kNumClasses; ++k) {
      std::vector<double> rev(b.per_column_um[k].rbegin(), b.per_column_um[k].rend());
      REQUIRE(a.per_column_um[k] == rev);
      REQUIRE(a.mean_um[k].has_value() == b.mean_um[k].has_value());
      if (a.mean_um[k]) REQUIRE(*a.mean_um[k] == doctest::Approx(*b.mean_um[k]));
    }
  }
}

TEST_CASE("wound width never grows as epidermis is added") {
  std::mt19937_64 rng(123);
  LabelMask m = banded(30, 60, 4, 6, 5, 50);
  m(4, 0) = 1;  // leave intact reference columns
  double last = wound_extent(m, {10, 25}).width_um;
  std::uniform_int_distribution<int> row(4, 9), col(5, 49);
  for (int t = 0; t < 60; ++t) {
    m(row(rng), col(rng)) = 1;
    const double now = wound_extent(m, {10, 25}).width_um;
    REQUIRE(now <= last);
    last = now;
  }
}

TEST_CASE("healing curve CSV round trip") {
  WoundExtent a, b;
  a.area_um2 = 1234.5;
  b.area_um2 = 100.25;
  const HealingCurve c = healing_curve({{0, a}, {6, b}});
  const std::string csv = healing_curve_csv(c);
  CHECK(csv.rfind("day,area_um2,closure_frac\n", 0) == 0);
  const HealingCurve back = parse_healing_curve_csv(csv);
  REQUIRE(back.points.size() == 2);
  CHECK(back.points[1].day == 6);
  CHECK(back.points[1].area_um2 == doctest::Approx(100.25));
  CHECK(back.points[1].closure_frac == doctest::Approx(c.points[1].closure_frac));
}
