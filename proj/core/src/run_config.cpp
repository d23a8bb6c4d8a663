#include "inrseg/run_config.hpp"

#include <concepts>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "inrseg/errors.hpp"

namespace inrseg {
namespace {

using nlohmann::json;

// Reads the keys of one JSON object, rejecting any it was not asked about.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError("config: '" + label() + "' must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), where_.empty() ? key : where_ + "." + key);
  }

  template <std::unsigned_integral T>
  void get(const char* key, T& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) fail(key, "a non-negative integer");
      out = v->get<T>();
    }
  }
  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::filesystem::path& out) {
    std::string s = out.string();
    get(key, s);
    out = s;
  }
  void get(const char* key, std::vector<std::size_t>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "an array of non-negative integers");
      out.clear();
      for (const json& e : *v) {
        if (!e.is_number_unsigned()) fail(key, "an array of non-negative integers");
        out.push_back(e.get<std::size_t>());
      }
    }
  }
  void get(const char* key, std::array<double, 2>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
        fail(key, "a [min, max] pair of numbers");
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k))
        throw ConfigError("config: unknown key '" + (where_.empty() ? k : where_ + "." + k) + "'");
    }
  }

 private:
  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  [[noreturn]] void fail(const char* key, const char* what) const {
    throw ConfigError("config: '" + (where_.empty() ? std::string(key) : where_ + "." + key) +
                      "' must be " + what);
  }
  std::string label() const { return where_.empty() ? "<root>" : where_; }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

const char* outer_mode_name(OuterMode m) { return m == OuterMode::kSgd ? "sgd" : "adam"; }
const char* inner_loss_name(InnerLoss l) {
  return l == InnerLoss::kReconOnly ? "recon_only" : "recon_plus_cls";
}

}  // namespace

const char* task_name(Task t) {
  switch (t) {
    case Task::kSeg2dCoarse: return "seg2d_coarse";
    case Task::kSeg2dFine: return "seg2d_fine";
    case Task::kSeg3d: return "seg3d";
    case Task::kSynthetic2d: return "synthetic2d";
    case Task::kSynthetic3d: return "synthetic3d";
  }
  return "unknown";
}

Task parse_task(const std::string& name) {
  for (Task t : {Task::kSeg2dCoarse, Task::kSeg2dFine, Task::kSeg3d, Task::kSynthetic2d,
                 Task::kSynthetic3d}) {
    if (name == task_name(t)) return t;
  }
  throw ConfigError("config: unknown task '" + name + "'");
}

RunConfig preset(Task task) {
  RunConfig c;
  c.task = task;
  SirenConfig& m = c.model;
  MetaConfig& meta = c.meta;
  switch (task) {
    case Task::kSeg2dCoarse:
      m.input_dim = 2, m.num_layers = 6, m.hidden_width = 128, m.num_classes = 5;
      meta.gamma = 1.0;
      break;
    case Task::kSeg2dFine:
      m.input_dim = 2, m.num_layers = 5, m.hidden_width = 512, m.num_classes = 24;
      meta.gamma = 2.0;
      break;
    case Task::kSeg3d:
      m.input_dim = 3, m.num_layers = 6, m.hidden_width = 256, m.num_classes = 5;
      meta.gamma = 3.0;
      meta.recon_bg_scale = 0.1;
      break;
    case Task::kSynthetic2d:
      m.input_dim = 2, m.num_layers = 4, m.hidden_width = 64, m.num_classes = 4;
      meta.gamma = 1.0;
      meta.lr_outer = 1e-3;
      meta.val_every = 64;
      meta.val_fit_steps = 2;
      c.synth.dims = 2, c.synth.extent = 64, c.synth.num_classes = 4;
      c.head.max_epochs = 40;
      break;
    case Task::kSynthetic3d:
      m.input_dim = 3, m.num_layers = 4, m.hidden_width = 64, m.num_classes = 4;
      meta.gamma = 3.0;
      meta.recon_bg_scale = 0.1;
      meta.lr_outer = 1e-3;
      meta.val_every = 16;
      meta.val_fit_steps = 2;
      c.synth.dims = 3, c.synth.extent = 24, c.synth.num_classes = 4;
      c.counts = {16, 4, 4};
      c.head.max_epochs = 40;
      break;
  }
  m.head_hidden_width = m.hidden_width;
  c.synth.dims = m.input_dim;
  c.synth.num_classes = m.num_classes;
  c.head.lr = head_learning_rate(m.num_classes);
  return c;
}

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.model = model;
  p.meta = meta;
  p.meta.seed = seed;
  p.head = head;
  p.head.gamma = meta.gamma;
  p.head.seed = seed;
  p.seed = seed;
  return p;
}

void RunConfig::validate() const {
  try {
    model.validate();
    meta.validate();
    if (manifest.empty()) synth.validate();
  } catch (const InputError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (manifest.empty()) {
    if (synth.dims != model.input_dim)
      throw ConfigError("config: synthetic data dimensionality does not match the task");
    if (synth.num_classes != model.num_classes)
      throw ConfigError("config: data.synthetic.num_classes must equal model.num_classes");
  }
  if (!(head.lr > 0.0)) throw ConfigError("config: head.lr must be > 0");
  if (head.batch_rows == 0) throw ConfigError("config: head.batch_rows must be > 0");
  if (eval.upscale < 1) throw ConfigError("config: eval.upscale must be >= 1");
  if (eval.sensitivity.trials < 1) throw ConfigError("config: eval.sensitivity.trials must be >= 1");
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  Section top(root, "");
  std::string task = "synthetic2d";
  top.get("task", task);
  RunConfig c = preset(parse_task(task));
  top.get("seed", c.seed);
  top.get("threads", c.threads);
  top.get("out", c.out_dir);
  bool head_lr_set = false;
  bool synth_classes_set = false;

  if (top.has("model")) {
    Section s = top.child("model");
    s.get("output_dim", c.model.output_dim);
    s.get("num_layers", c.model.num_layers);
    s.get("hidden_width", c.model.hidden_width);
    s.get("omega0", c.model.omega0);
    s.get("num_classes", c.model.num_classes);
    s.get("head_hidden_width", c.model.head_hidden_width);
    if (!s.has("head_hidden_width") && s.has("hidden_width"))
      c.model.head_hidden_width = c.model.hidden_width;
    s.get("leaky_slope", c.model.leaky_slope);
    s.finish();
  }
  if (top.has("meta")) {
    Section s = top.child("meta");
    s.get("inner_steps", c.meta.inner_steps);
    s.get("epochs", c.meta.epochs);
    s.get("fit_steps", c.meta.fit_steps);
    s.get("lr_inner", c.meta.lr_inner);
    s.get("lr_outer", c.meta.lr_outer);
    s.get("gamma", c.meta.gamma);
    s.get("recon_bg_scale", c.meta.recon_bg_scale);
    s.get("val_every", c.meta.val_every);
    s.get("val_fit_steps", c.meta.val_fit_steps);
    s.get("meta_batch", c.meta.meta_batch);
    s.get("checkpoint_every", c.meta.checkpoint_every);
    std::string mode = outer_mode_name(c.meta.outer_mode);
    s.get("outer_mode", mode);
    if (mode == "adam") c.meta.outer_mode = OuterMode::kAdam;
    else if (mode == "sgd") c.meta.outer_mode = OuterMode::kSgd;
    else throw ConfigError("config: 'meta.outer_mode' must be \"adam\" or \"sgd\"");
    std::string loss = inner_loss_name(c.meta.inner_loss);
    s.get("inner_loss", loss);
    if (loss == "recon_plus_cls") c.meta.inner_loss = InnerLoss::kReconPlusCls;
    else if (loss == "recon_only") c.meta.inner_loss = InnerLoss::kReconOnly;
    else throw ConfigError("config: 'meta.inner_loss' must be \"recon_plus_cls\" or \"recon_only\"");
    s.finish();
  }
  if (top.has("head")) {
    Section s = top.child("head");
    head_lr_set = s.has("lr");
    s.get("lr", c.head.lr);
    s.get("max_epochs", c.head.max_epochs);
    s.get("batch_rows", c.head.batch_rows);
    s.get("plateau_tol", c.head.plateau_tol);
    s.get("plateau_window", c.head.plateau_window);
    s.finish();
  }
  if (!head_lr_set) c.head.lr = head_learning_rate(c.model.num_classes);
  if (top.has("data")) {
    Section s = top.child("data");
    s.get("manifest", c.manifest);
    if (s.has("synthetic")) {
      Section y = s.child("synthetic");
      y.get("extent", c.synth.extent);
      synth_classes_set = y.has("num_classes");
      y.get("num_classes", c.synth.num_classes);
      y.get("noise_sigma", c.synth.noise_sigma);
      y.get("center_jitter", c.synth.center_jitter);
      y.get("radius_jitter", c.synth.radius_jitter);
      y.get("rotation_jitter", c.synth.rotation_jitter);
      y.get("train", c.counts.train);
      y.get("val", c.counts.val);
      y.get("test", c.counts.test);
      y.finish();
    }
    s.finish();
  }
  if (top.has("eval")) {
    Section s = top.child("eval");
    s.get("overfit_checkpoints", c.eval.overfit_checkpoints);
    s.get("pca_components", c.eval.pca_components);
    s.get("upscale", c.eval.upscale);
    if (s.has("sensitivity")) {
      Section y = s.child("sensitivity");
      y.get("rotation_deg", c.eval.sensitivity.rotation_deg);
      y.get("translation_px", c.eval.sensitivity.translation_px);
      y.get("trials", c.eval.sensitivity.trials);
      y.finish();
    }
    s.finish();
  }
  top.finish();

  if (!synth_classes_set) c.synth.num_classes = c.model.num_classes;
  c.synth.seed = c.seed;
  c.eval.sensitivity.seed = c.seed;
  c.eval.sensitivity.fit_steps = c.meta.fit_steps;
  c.eval.sensitivity.lr = c.meta.lr_inner;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json(const RunConfig& c) {
  json j;
  j["task"] = task_name(c.task);
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out"] = c.out_dir.string();
  j["model"] = {{"output_dim", c.model.output_dim},
                {"num_layers", c.model.num_layers},
                {"hidden_width", c.model.hidden_width},
                {"omega0", c.model.omega0},
                {"num_classes", c.model.num_classes},
                {"head_hidden_width", c.model.head_hidden_width},
                {"leaky_slope", c.model.leaky_slope}};
  j["meta"] = {{"inner_steps", c.meta.inner_steps},
               {"epochs", c.meta.epochs},
               {"fit_steps", c.meta.fit_steps},
               {"lr_inner", c.meta.lr_inner},
               {"lr_outer", c.meta.lr_outer},
               {"gamma", c.meta.gamma},
               {"recon_bg_scale", c.meta.recon_bg_scale},
               {"val_every", c.meta.val_every},
               {"val_fit_steps", c.meta.val_fit_steps},
               {"meta_batch", c.meta.meta_batch},
               {"checkpoint_every", c.meta.checkpoint_every},
               {"outer_mode", outer_mode_name(c.meta.outer_mode)},
               {"inner_loss", inner_loss_name(c.meta.inner_loss)}};
  j["head"] = {{"lr", c.head.lr},
               {"max_epochs", c.head.max_epochs},
               {"batch_rows", c.head.batch_rows},
               {"plateau_tol", c.head.plateau_tol},
               {"plateau_window", c.head.plateau_window}};
  json data;
  if (!c.manifest.empty()) data["manifest"] = c.manifest.string();
  data["synthetic"] = {{"extent", c.synth.extent},
                       {"num_classes", c.synth.num_classes},
                       {"noise_sigma", c.synth.noise_sigma},
                       {"center_jitter", c.synth.center_jitter},
                       {"radius_jitter", c.synth.radius_jitter},
                       {"rotation_jitter", c.synth.rotation_jitter},
                       {"train", c.counts.train},
                       {"val", c.counts.val},
                       {"test", c.counts.test}};
  j["data"] = data;
  j["eval"] = {{"overfit_checkpoints", c.eval.overfit_checkpoints},
               {"pca_components", c.eval.pca_components},
               {"upscale", c.eval.upscale},
               {"sensitivity",
                {{"rotation_deg", c.eval.sensitivity.rotation_deg},
                 {"translation_px", c.eval.sensitivity.translation_px},
                 {"trials", c.eval.sensitivity.trials}}}};
  return j.dump(2) + "\n";
}

}  // namespace inrseg
