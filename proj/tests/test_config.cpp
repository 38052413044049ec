#include "doctest.h"
#include "octskin/config.hpp"
#include "octskin/phantom.hpp"

using namespace octskin;

TEST_CASE("key-value parsing") {
  const auto kv = parse_key_values("# header\n a = 1 \n\nb=two # trailing\n", "t");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0].key == "a");
  CHECK(kv[0].value == "1");
  CHECK(kv[1].value == "two");
  CHECK(kv[1].line == 4);
  CHECK_THROWS_AS(parse_key_values("a = 1\na = 2\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_key_values("just words\n", "t"), ConfigError);
  CHECK_THROWS_AS(parse_key_values(" = 3\n", "t"), ConfigError);
}

TEST_CASE("strict scalar conversion") {
  CHECK(parse_double("1e-05", "x") == 1e-5);
  CHECK(parse_int("-12", "x") == -12);
  CHECK(parse_bool("true", "x"));
  CHECK_FALSE(parse_bool("false", "x"));
  CHECK_THROWS_AS(parse_double("1.5abc", "x"), ConfigError);
  CHECK_THROWS_AS(parse_int("3.0", "x"), ConfigError);
  CHECK_THROWS_AS(parse_bool("yes please", "x"), ConfigError);
  CHECK(parse_double_list("0.3, 0.2,0.5", "x") == std::vector<double>{0.3, 0.2, 0.5});
}

TEST_CASE("run config defaults and overrides") {
  RunConfig cfg;
  CHECK(cfg.get_real("learning_rate") == 1e-5);
  CHECK(cfg.get_int("epochs") == 30);
  CHECK(cfg.get_int("patch_px") == 128);
  CHECK(cfg.get_string("arch") == "base_unet");

  const RunConfig from = RunConfig::from_text("epochs = 5\narch = resnet34_unet\nsplit_by_image = true\n");
  CHECK(from.get_int("epochs") == 5);
  CHECK(from.get_bool("split_by_image"));
  CHECK(from.get_string("arch") == "resnet34_unet");

  CHECK_THROWS_AS(RunConfig::from_text("no_such_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_text("epochs = many\n"), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("learning_rate"), ConfigError);
}

TEST_CASE("config dump reloads to the same values") {
  RunConfig cfg;
  cfg.set("batch_size", "4");
  cfg.set("phantom_wound_halfwidth_frac", "0.125");
  const RunConfig back = RunConfig::from_text(cfg.to_text());
  CHECK(back.to_text() == cfg.to_text());
  CHECK(back.get_real("phantom_wound_halfwidth_frac") == 0.125);
}

TEST_CASE("phantom spec follows the config") {
  RunConfig cfg;
  cfg.set("phantom_width_px", "300");
  cfg.set("phantom_seed", "9");
  const PhantomSpec s = PhantomSpec::from_config(cfg);
  CHECK(s.width_px == 300);
  CHECK(s.seed == 9);
  CHECK(s.layer_mean_intensity[0] == doctest::Approx(0.85));
}
