#include <doctest.h>

#include <json.hpp>

#include "toonsynth/config.hpp"
#include "toonsynth/error.hpp"

using namespace toonsynth;

TEST_CASE("defaults round trip through JSON") {
  const RunConfig d;
  const RunConfig back = run_config_from_json(run_config_to_json(d));
  CHECK(run_config_to_json(back) == run_config_to_json(d));
}

TEST_CASE("missing fields keep defaults, unknown ones are rejected") {
  const RunConfig c = run_config_from_json(R"({"master_seed": 9, "subjects": {"lambda": 3.0}})");
  CHECK(c.master_seed == 9);
  CHECK(c.subjects.lambda == 3.0);
  CHECK(c.canvas == 720);
  CHECK_THROWS_AS(run_config_from_json(R"({"master_sed": 9})"), FormatError);
  CHECK_THROWS_AS(run_config_from_json(R"({"subjects": {"lamda": 2}})"), FormatError);
}

TEST_CASE("validation") {
  RunConfig c;
  c.strategy_weights = {0.7, 0.7};
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = RunConfig{};
  c.canvas = 0;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
  c = RunConfig{};
  c.iou_min = 0.9;
  CHECK_THROWS_AS(validate(c), InvalidArgument);
}

TEST_CASE("relative pool paths resolve against the config directory") {
  const RunConfig c =
      run_config_from_json(R"({"pools": {"foreground_manifest": "fg/pool.json", "backgrounds": "/abs/bg"}})", "/data/run");
  CHECK(c.pools.foreground_manifest == std::filesystem::path("/data/run/fg/pool.json"));
  CHECK(c.pools.backgrounds == std::filesystem::path("/abs/bg"));
}
