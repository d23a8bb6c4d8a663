#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <vector>

#include "inrseg/checkpoint.hpp"
#include "inrseg/dataset.hpp"
#include "inrseg/errors.hpp"
#include "inrseg/grid.hpp"
#include "inrseg/harness.hpp"
#include "inrseg/meta_learning.hpp"
#include "inrseg/metrics.hpp"
#include "inrseg/npy.hpp"
#include "inrseg/parallel.hpp"
#include "inrseg/pca.hpp"
#include "inrseg/report_io.hpp"
#include "inrseg/seg_pipeline.hpp"
#include "inrseg/synthetic.hpp"
#include "json.hpp"

namespace inrseg::cli {
namespace fs = std::filesystem;

namespace {

struct Splits {
  std::vector<Sample> train, val, test;
};

Splits load_splits(const RunConfig& c) {
  std::vector<Sample> all;
  if (!c.manifest.empty()) {
    LoadedDataset d = load_dataset(c.manifest, c.model.num_classes);
    for (const std::string& w : d.warnings) std::cerr << "warning: " << w << '\n';
    all = std::move(d.samples);
  } else {
    all = generate_synthetic(c.synth, c.counts.train, c.counts.val, c.counts.test);
    // same scaling a manifest round trip applies
    for (Sample& s : all) normalize_intensity(s.image);
  }
  return {select_split(all, Split::kTrain), select_split(all, Split::kVal),
          select_split(all, Split::kTest)};
}

SirenConfig data_model(const RunConfig& c, const Splits& s) {
  SirenConfig m = c.model;
  for (const auto* split : {&s.train, &s.val, &s.test}) {
    if (split->empty()) continue;
    const Sample& x = split->front();
    if (x.dims() != m.input_dim)
      throw InputError("data is " + std::to_string(x.dims()) + "D but task " + task_name(c.task) +
                       " expects " + std::to_string(m.input_dim) + "D");
    m.output_dim = x.channels();
    break;
  }
  return m;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw MissingFileError(std::string(what) + " not found: " + p.string());
}

fs::path or_default(const fs::path& given, const fs::path& fallback) {
  return given.empty() ? fallback : given;
}

SirenModel load_model(const fs::path& path) {
  require_file(path, "checkpoint");
  return read_checkpoint(path).model;
}

void check_model_matches(const SirenModel& m, const std::vector<Sample>& samples) {
  for (const Sample& s : samples) {
    if (s.dims() != m.config.input_dim || s.channels() != m.config.output_dim)
      throw InputError("subject " + s.id + " has shape " + shape_to_string(s.image.shape()) +
                       ", checkpoint expects " + std::to_string(m.config.input_dim) + "D with " +
                       std::to_string(m.config.output_dim) + " channel(s)");
    if (s.num_classes > m.config.num_classes)
      throw InputError("dataset has " + std::to_string(s.num_classes) +
                       " classes, checkpoint head has " + std::to_string(m.config.num_classes));
  }
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

Shape with_trailing(Shape s, std::size_t extra) {
  if (extra != 1) s.push_back(extra);
  return s;
}

// Image as a PGM: 2D directly, 3D through its middle slice.
void write_image_pgm(const fs::path& path, const DenseArray& image) {
  write_pgm(path, middle_slice(image));
}

void write_labels_pgm(const fs::path& path, const std::vector<std::uint8_t>& labels,
                      const Shape& extents, std::size_t num_classes) {
  DenseArray img(extents);
  const double scale = num_classes > 1 ? 1.0 / static_cast<double>(num_classes - 1) : 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) img[i] = labels[i] * scale;
  write_pgm(path, middle_slice(img));
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::vector<std::string> lines;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

// Drops log rows past `step` so a resumed run appends exactly where the checkpoint left off.
void truncate_log(const fs::path& log, std::uint64_t step) {
  if (!fs::exists(log)) return;
  const std::vector<std::string> lines = read_lines(log);
  std::ofstream out(log, std::ios::trunc);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0 && std::stoull(lines[i].substr(0, lines[i].find(','))) > step) break;
    out << lines[i] << '\n';
  }
}

TrainedPipeline pipeline_from(const SirenModel& model, const RunConfig& c) {
  TrainedPipeline p;
  p.strategy = InitStrategy::kMetaSeg;
  p.model = model;
  p.seed = c.seed;
  return p;
}

}  // namespace

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig c;
  if (!g.config.empty()) {
    c = load_run_config(g.config);
    if (!g.task.empty() && parse_task(g.task) != c.task)
      throw ConfigError("--task " + g.task + " contradicts the config file's task " +
                        task_name(c.task));
  } else {
    c = parse_run_config(nlohmann::json{{"task", g.task.empty() ? "synthetic2d" : g.task}}.dump());
  }
  if (g.out) c.out_dir = *g.out;
  if (g.seed) {
    c.seed = *g.seed;
    c.synth.seed = c.seed;
    c.eval.sensitivity.seed = c.seed;
  }
  if (g.threads) c.threads = *g.threads;
  if (g.manifest) c.manifest = *g.manifest;
  c.validate();
  return c;
}

int cmd_gen_synth(const RunConfig& c, const GenSynthOptions& o) {
  if (c.model.input_dim != c.synth.dims) throw ConfigError("gen-synth: task has no synthetic data");
  const std::vector<Sample> all = generate_synthetic(
      c.synth, o.train.value_or(c.counts.train), o.val.value_or(c.counts.val),
      o.test.value_or(c.counts.test));
  fs::create_directories(c.out_dir);
  const fs::path manifest = write_dataset(all, c.out_dir, c.synth.num_classes);
  std::cout << manifest.string() << '\n';
  return 0;
}

int cmd_meta_train(const RunConfig& c, const MetaTrainOptions& o) {
  const Splits s = load_splits(c);
  const PipelineConfig pc = c.pipeline();
  SirenConfig model_cfg = data_model(c, s);
  Rng rng(c.seed);
  const SirenModel init = siren_init(model_cfg, rng);

  fs::create_directories(c.out_dir);
  const fs::path log_path = c.out_dir / "meta_log.csv";
  std::optional<MetaState> resume;
  if (!o.resume.empty()) {
    require_file(o.resume, "checkpoint");
    resume = from_checkpoint(read_checkpoint(o.resume), AdamHyper{.lr = pc.meta.lr_outer});
    if (!(resume->model.config == model_cfg))
      throw ConfigError("--resume: checkpoint architecture does not match the config");
    truncate_log(log_path, resume->step);
  }
  {
    std::ofstream cfg(c.out_dir / "config.json");
    cfg << to_json(c) << '\n';
  }

  CsvWriter log(log_path, {"outer_step", "inner_loss_first", "inner_loss_last", "val_dice", "val_psnr"},
                resume.has_value());
  MetaTrainHooks hooks;
  hooks.on_step = [&log](const MetaLogRow& r) {
    log.cell(r.outer_step).cell(r.inner_loss_first).cell(r.inner_loss_last);
    if (r.val_dice) log.cell(*r.val_dice).cell(*r.val_psnr);
    else log.empty().empty();
    log.end_row();
  };
  const std::size_t every = pc.meta.checkpoint_every;
  hooks.on_checkpoint = [&c, every](const MetaState& st) {
    if (every > 0 && st.step % every == 0)
      write_checkpoint(c.out_dir / ("meta_step" + std::to_string(st.step) + ".ckpt"),
                       to_checkpoint(st));
  };

  const MetaState final_state =
      meta_train(s.train, s.val, init, pc.meta, hooks, resume ? &*resume : nullptr);
  write_checkpoint(c.out_dir / "meta_final.ckpt", to_checkpoint(final_state));
  write_checkpoint(c.out_dir / "meta_best.ckpt",
                   CheckpointData{final_state.best_or_current(),
                                  final_state.has_best ? final_state.best_step : final_state.step,
                                  {}});
  std::cout << "meta-train: " << final_state.step << " outer steps";
  if (final_state.has_best)
    std::cout << ", best val dice " << format_number(final_state.best_score) << " at step "
              << final_state.best_step;
  std::cout << '\n';
  return 0;
}

int cmd_fit_head(const RunConfig& c, const FitHeadOptions& o) {
  const fs::path ckpt = or_default(o.checkpoint, c.out_dir / "meta_best.ckpt");
  require_file(ckpt, "checkpoint");
  CheckpointData data = read_checkpoint(ckpt);
  const Splits s = load_splits(c);
  check_model_matches(data.model, s.train);
  const PipelineConfig pc = c.pipeline();

  const FeatureDataset fd =
      build_feature_dataset(data.model, s.train, pc.meta.fit_steps, pc.meta.lr_inner);
  HeadTrainResult r =
      train_seg_head(fd, data.model.head, data.model.config.leaky_slope, pc.head);

  fs::create_directories(c.out_dir);
  CsvWriter log(c.out_dir / "head_log.csv", {"epoch", "loss"});
  for (std::size_t e = 0; e < r.epoch_loss.size(); ++e)
    log.cell(std::uint64_t{e + 1}).cell(r.epoch_loss[e]).end_row();

  CheckpointData out{data.model, data.meta_step, {}};
  out.model.head = std::move(r.head);
  write_checkpoint(c.out_dir / "model.ckpt", out);
  std::cout << "fit-head: " << r.epoch_loss.size() << " epochs, final loss "
            << format_number(r.epoch_loss.back()) << '\n';
  return 0;
}

int cmd_segment(const RunConfig& c, const SegmentOptions& o) {
  if (o.image.empty()) throw ConfigError("segment: --image is required");
  const SirenModel model = load_model(or_default(o.checkpoint, c.out_dir / "model.ckpt"));
  require_file(o.image, "image");
  DenseArray image = read_npy_float(o.image);
  if (!normalize_intensity(image)) std::cerr << "warning: constant image " << o.image << '\n';

  const std::size_t steps = o.steps.value_or(c.meta.fit_steps);
  const Segmentation seg = infer_segment(model, image, steps, c.meta.lr_inner);

  fs::create_directories(c.out_dir);
  const std::string stem = stem_of(o.image);
  write_npy_u8(artifact_path(c.out_dir, stem, "labels", "npy"), seg.labels, seg.extents);
  write_npy(artifact_path(c.out_dir, stem, "recon", "npy"),
            seg.recon.reshaped(with_trailing(seg.extents, model.config.output_dim)));
  CsvWriter fit(artifact_path(c.out_dir, stem, "fit_curve", "csv"), {"step", "recon_loss"});
  for (std::size_t i = 0; i < seg.fit_curve.size(); ++i)
    fit.cell(std::uint64_t{i + 1}).cell(seg.fit_curve[i]).end_row();
  if (o.probs) {
    Shape ps = seg.extents;
    ps.push_back(model.config.num_classes);
    write_npy(artifact_path(c.out_dir, stem, "probs", "npy"), seg.probs.reshaped(ps));
  }
  if (o.upscale > 1) {
    Shape up = seg.extents;
    for (std::size_t& e : up) e *= o.upscale;
    write_npy_u8(artifact_path(c.out_dir, stem, "labels_x" + std::to_string(o.upscale), "npy"),
                 segment_at_resolution(seg.fitted, up), up);
  }
  std::cout << "segment: " << stem << " " << shape_to_string(seg.extents) << " psnr "
            << format_number(seg.psnr) << " dB after " << steps << " steps\n";
  return 0;
}

int cmd_eval(const RunConfig& c, const EvalOptions& o) {
  const Splits s = load_splits(c);
  if (s.test.empty()) throw DataError("eval: dataset has no test subjects");
  const PipelineConfig pc = c.pipeline();
  fs::create_directories(c.out_dir);

  if (o.ablation) {
    const std::vector<InitStrategy> order{InitStrategy::kMetaSeg, InitStrategy::kMetaImageOnly,
                                          InitStrategy::kFixed, InitStrategy::kRandom};
    PipelineConfig ac = pc;
    ac.model = data_model(c, s);
    const std::vector<AblationRow> rows = ablation_run(s.train, s.val, s.test, ac, order);
    CsvWriter t(c.out_dir / "ablation.csv", {"strategy", "dice_mean", "dice_std", "subjects"});
    for (const AblationRow& r : rows)
      t.cell(std::string(strategy_name(r.strategy)))
          .cell(r.summary.mean)
          .cell(r.summary.stddev)
          .cell(std::uint64_t{r.summary.count})
          .end_row();
    std::cout << "eval: ablation over " << rows.size() << " strategies\n";
    if (!o.overfit_sweep && !o.sensitivity && o.pca == 0) return 0;
  }

  const SirenModel model = load_model(or_default(o.checkpoint, c.out_dir / "model.ckpt"));
  check_model_matches(model, s.test);
  const TrainedPipeline p = pipeline_from(model, c);
  const std::size_t steps = c.meta.fit_steps;
  const double lr = c.meta.lr_inner;

  if (!o.ablation) {
    CsvWriter t(c.out_dir / "eval_test.csv", {"subject", "dice", "psnr"});
    std::vector<double> dices;
    for (const Sample& x : s.test) {
      const Segmentation seg = infer_segment(model, x.image, steps, lr);
      const double d = dice(seg.labels, x.mask, model.config.num_classes).foreground_mean;
      dices.push_back(d);
      t.cell(x.id).cell(d).cell(seg.psnr).end_row();
      write_image_pgm(artifact_path(c.out_dir, x.id, "image", "pgm"),
                      x.image.reshaped(x.extents));
      write_image_pgm(artifact_path(c.out_dir, x.id, "recon", "pgm"),
                      seg.recon.reshaped(x.extents));
      write_labels_pgm(artifact_path(c.out_dir, x.id, "labels", "pgm"), seg.labels, x.extents,
                       model.config.num_classes);
      write_labels_pgm(artifact_path(c.out_dir, x.id, "truth", "pgm"), x.mask, x.extents,
                       model.config.num_classes);
    }
    const Summary sum = summarize(dices);
    std::cout << "eval: test dice " << format_number(sum.mean) << " +- "
              << format_number(sum.stddev) << " over " << sum.count << " subjects at " << steps
              << " steps\n";
  }

  if (o.overfit_sweep) {
    const TestEvaluation e = evaluate_test(p, s.test, c.eval.overfit_checkpoints, lr);
    for (std::size_t i = 0; i < e.subject_ids.size(); ++i) {
      CsvWriter t(artifact_path(c.out_dir, e.subject_ids[i], "overfit", "csv"),
                  {"step", "psnr", "dice"});
      for (const SweepPoint& pt : e.per_subject[i])
        t.cell(std::uint64_t{pt.step}).cell(pt.psnr).cell(pt.dice).end_row();
    }
    CsvWriter t(c.out_dir / "overfit_summary.csv",
                {"step", "dice_mean", "dice_std", "psnr_mean", "psnr_std"});
    for (std::size_t k : e.checkpoints) {
      const Summary d = e.dice_at(k), q = e.psnr_at(k);
      t.cell(std::uint64_t{k}).cell(d.mean).cell(d.stddev).cell(q.mean).cell(q.stddev).end_row();
    }
  }

  if (o.sensitivity) {
    const std::vector<SensitivityRow> rows = sensitivity_eval(p, s.test, c.eval.sensitivity);
    CsvWriter t(c.out_dir / "sensitivity.csv", {"perturbation", "clean_dice", "perturbed_dice",
                                                "drop", "relative_drop", "evaluations"});
    for (const SensitivityRow& r : rows)
      t.cell(r.perturbation)
          .cell(r.clean_dice)
          .cell(r.perturbed_dice)
          .cell(r.drop)
          .cell(r.relative_drop)
          .cell(std::uint64_t{r.evaluations})
          .end_row();
  }

  if (o.pca > 0) {
    for (const Sample& x : s.test) {
      const Segmentation seg = infer_segment(model, x.image, steps, lr);
      const DenseArray features =
          forward(seg.fitted, make_grid(x.extents).coords, false).trace.penultimate();
      const PcaResult r = pca_features(features, o.pca, x.extents);
      CsvWriter t(artifact_path(c.out_dir, x.id, "pca", "csv"),
                  {"component", "eigenvalue", "explained_ratio"});
      for (std::size_t j = 0; j < r.k; ++j) {
        t.cell(std::uint64_t{j}).cell(r.eigenvalues[j]).cell(r.explained_ratio[j]).end_row();
        const std::string kind = "pca" + std::to_string(j);
        write_npy(artifact_path(c.out_dir, x.id, kind, "npy"), r.maps[j]);
        write_image_pgm(artifact_path(c.out_dir, x.id, kind, "pgm"), r.maps[j]);
      }
    }
  }
  return 0;
}

}  // namespace inrseg::cli
