#include <algorithm>

#include "doctest.h"
#include "octskin/preprocess.hpp"
#include "test_support.hpp"

using namespace octskin;
using octskin::testing::image_from;

namespace {

OctImage random_image(int h, int w, std::mt19937_64& rng, float lo = 0.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Raster<float> px(h, w);
  for (auto& v : px.data()) v = u(rng);
  return image_from(px);
}

// Full sort of the edge-replicated neighbourhood.
float brute_median(const OctImage& img, int r, int c, int k) {
  std::vector<float> v;
  for (int dr = -k / 2; dr <= k / 2; ++dr)
    for (int dc = -k / 2; dc <= k / 2; ++dc) {
      const int rr = std::min(std::max(r + dr, 0), img.height() - 1);
      const int cc = std::min(std::max(c + dc, 0), img.width() - 1);
      v.push_back(img.pixels(rr, cc));
    }
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double variance(const OctImage& img) {
  const auto& d = img.pixels.data();
  double m = 0;
  for (float v : d) m += v;
  m /= d.size();
  double s = 0;
  for (float v : d) s += (v - m) * (v - m);
  return s / d.size();
}

}  // namespace

TEST_CASE("median_filter special cases") {
  std::mt19937_64 rng(1);
  const OctImage img = random_image(20, 30, rng);
  CHECK(median_filter(img, 1).pixels == img.pixels);

  const OctImage flat = image_from(Raster<float>(16, 16, 0.37f));
  for (int k : {3, 5, 7}) CHECK(median_filter(flat, k).pixels == flat.pixels);

  Raster<float> spike(3, 3, 0.0f);
  spike(1, 1) = 1.0f;
  CHECK(median_filter(image_from(spike), 3).pixels(1, 1) == 0.0f);

  CHECK_THROWS_AS(median_filter(img, 4), ParameterError);
  CHECK_THROWS_AS(median_filter(img, 0), ParameterError);
  CHECK_THROWS_AS(median_filter(img, 21), ParameterError);
  CHECK_NOTHROW(median_filter(img, 19));
}

TEST_CASE("median_filter matches a brute-force neighbourhood sort") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const OctImage img = random_image(9 + t, 13 + 2 * t, rng);
    for (int k : {3, 5, 9}) {
      const OctImage out = median_filter(img, k);
      for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c) REQUIRE(out.pixels(r, c) == brute_median(img, r, c, k));
    }
  }
}

TEST_CASE("median_filter output stays inside the input range and keeps metadata") {
  std::mt19937_64 rng(3);
  OctImage img = random_image(32, 40, rng, 0.2f, 0.6f);
  img.spacing = {2.0, 3.0};
  img.day = 8;
  const OctImage out = median_filter(img, 5);
  const auto [lo, hi] = std::minmax_element(img.pixels.data().begin(), img.pixels.data().end());
  for (float v : out.pixels.data()) REQUIRE((v >= *lo && v <= *hi));
  CHECK(out.spacing == img.spacing);
  CHECK(out.day == 8);
}

TEST_CASE("despeckle composes median passes") {
  std::mt19937_64 rng(4);
  const OctImage img = random_image(24, 24, rng);
  CHECK(despeckle(img, 3, 0).pixels == img.pixels);
  CHECK(despeckle(img, 3, 2).pixels == median_filter(median_filter(img, 3), 3).pixels);
  CHECK_THROWS_AS(despeckle(img, 2, 1), ParameterError);
  CHECK_THROWS_AS(despeckle(img, 3, -1), ParameterError);
}

TEST_CASE("despeckle reduces speckle variance on a constant field") {
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> speckle(4.0, 0.25);
  Raster<float> px(64, 64);
  for (auto& v : px.data()) v = static_cast<float>(std::clamp(0.5 * speckle(rng), 0.0, 1.0));
  const OctImage noisy = image_from(px);
  CHECK(variance(despeckle(noisy)) < variance(noisy));
}

TEST_CASE("normalize rescales to the unit interval") {
  Raster<float> px(1, 6);
  const float vals[] = {0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f};
  std::copy(std::begin(vals), std::end(vals), px.data().begin());
  const OctImage n = normalize(image_from(px));
  CHECK(n.pixels(0, 0) == 0.0f);
  CHECK(n.pixels(0, 5) == 1.0f);
  CHECK(n.pixels(0, 2) == doctest::Approx(0.4).epsilon(1e-6));

  const OctImage flat = normalize(image_from(Raster<float>(5, 5, 0.4f)));
  for (float v : flat.pixels.data()) REQUIRE(v == 0.0f);

  Raster<float> span(1, 3);
  span.data() = {0.0f, 0.25f, 1.0f};
  CHECK(normalize(image_from(span)).pixels == span);
}

TEST_CASE("normalize is idempotent") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const OctImage img = random_image(7, 11, rng, 0.1f, 0.9f);
    const OctImage once = normalize(img);
    REQUIRE(normalize(once).pixels == once.pixels);
  }
}

TEST_CASE("preprocess is despeckle then normalize") {
  std::mt19937_64 rng(7);
  const OctImage img = random_image(40, 40, rng, 0.1f, 0.5f);
  CHECK(preprocess(img, {5, 2}).pixels == normalize(despeckle(img, 5, 2)).pixels);
}
