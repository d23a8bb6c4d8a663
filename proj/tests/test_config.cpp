#include <string>

#include "doctest.h"
#include "inrseg/errors.hpp"
#include "inrseg/run_config.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace inrseg;

TEST_CASE("presets carry the published architectures") {
  const RunConfig coarse = preset(Task::kSeg2dCoarse);
  CHECK(coarse.model.num_layers == 6);
  CHECK(coarse.model.hidden_width == 128);
  CHECK(coarse.meta.gamma == 1.0);
  CHECK(coarse.head.lr == 5e-5);
  CHECK(coarse.model.parameter_count() == oracle::parameter_count(2, 1, 6, 128, 5, 128));

  const RunConfig fine = preset(Task::kSeg2dFine);
  CHECK(fine.model.num_classes == 24);
  CHECK(fine.meta.gamma == 2.0);
  CHECK(fine.head.lr == 1e-4);

  const RunConfig vol = preset(Task::kSeg3d);
  CHECK(vol.model.input_dim == 3);
  CHECK(vol.meta.gamma == 3.0);
  CHECK(vol.meta.recon_bg_scale == 0.1);

  for (Task t : {Task::kSeg2dCoarse, Task::kSeg2dFine, Task::kSeg3d, Task::kSynthetic2d,
                 Task::kSynthetic3d}) {
    CHECK(parse_task(task_name(t)) == t);
    CHECK(preset(t).meta.inner_steps == 2);
    CHECK(preset(t).meta.fit_steps == 100);
  }
}

TEST_CASE("synthetic preset matches the desk benchmark") {
  const RunConfig c = parse_run_config("{}");
  CHECK(c.task == Task::kSynthetic2d);
  CHECK(c.synth.extent == 64);
  CHECK(c.synth.num_classes == 4);
  CHECK(c.counts.train == 64);
  CHECK(c.counts.val == 16);
  CHECK(c.counts.test == 16);
  CHECK(c.manifest.empty());
}

TEST_CASE("config overrides and derived fields") {
  const RunConfig c = parse_run_config(R"({
    "task": "synthetic2d", "seed": 9,
    "model": {"hidden_width": 32},
    "meta": {"epochs": 3, "outer_mode": "sgd", "inner_loss": "recon_only"},
    "data": {"synthetic": {"extent": 32, "train": 8}},
    "eval": {"overfit_checkpoints": [2, 7]}
  })");
  CHECK(c.seed == 9);
  CHECK(c.synth.seed == 9);
  CHECK(c.eval.sensitivity.seed == 9);
  CHECK(c.model.hidden_width == 32);
  CHECK(c.model.head_hidden_width == 32);
  CHECK(c.meta.epochs == 3);
  CHECK(c.meta.outer_mode == OuterMode::kSgd);
  CHECK(c.meta.inner_loss == InnerLoss::kReconOnly);
  CHECK(c.synth.extent == 32);
  CHECK(c.counts.train == 8);
  CHECK(c.eval.overfit_checkpoints == std::vector<std::size_t>{2, 7});

  const PipelineConfig p = c.pipeline();
  CHECK(p.meta.seed == 9);
  CHECK(p.head.seed == 9);
  CHECK(p.head.gamma == c.meta.gamma);
}

TEST_CASE("to_json round trips") {
  for (Task t : {Task::kSeg2dCoarse, Task::kSeg2dFine, Task::kSeg3d, Task::kSynthetic2d,
                 Task::kSynthetic3d}) {
    RunConfig c = preset(t);
    if (t == Task::kSeg2dCoarse || t == Task::kSeg2dFine || t == Task::kSeg3d)
      c.manifest = "data/manifest.json";
    const std::string once = to_json(c);
    CHECK(to_json(parse_run_config(once)) == once);
  }
}

TEST_CASE("bad configs are rejected with the offending key") {
  auto message = [](const std::string& text) {
    try {
      parse_run_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(R"({"meta": {"epochz": 3}})").find("epochz") != std::string::npos);
  CHECK(message(R"({"colour": 1})").find("colour") != std::string::npos);
  CHECK(message(R"({"meta": {"epochs": "ten"}})").find("epochs") != std::string::npos);
  CHECK_FALSE(message(R"({"meta": {"lr_inner": -1}})").empty());
  CHECK_FALSE(message(R"({"task": "mnist"})").empty());
  CHECK_FALSE(message("{").empty());
  CHECK_FALSE(message(R"({"meta": {"outer_mode": "rmsprop"}})").empty());
  CHECK_FALSE(message(R"({"data": {"synthetic": {"num_classes": 3}}})").empty());
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}
