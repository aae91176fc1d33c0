#include "pixtok/config_json.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "pixtok/error.hpp"

namespace pixtok {

namespace {

// Reads the keys of one JSON object, remembering which were consumed so that
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(key_path(key) + ": " + e.what());
    }
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) throw ConfigError("unknown key '" + key_path(item.key()) + "'");
    }
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename Parse>
auto get_enum(ObjectReader& r, const std::string& key, Parse parse, decltype(parse("")) fallback) {
  std::string text;
  r.get(key, text);
  return text.empty() ? fallback : parse(text);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : (base / path).lexically_normal();
}

Json delta_json(std::optional<int> delta) {
  return delta ? Json(*delta) : Json("inf");
}

std::optional<int> delta_from_json(const Json& j, const std::string& key) {
  if (j.is_null()) return std::nullopt;
  if (j.is_string()) return parse_delta(j.get<std::string>());
  if (j.is_number_integer()) return parse_delta(std::to_string(j.get<int>()));
  throw ConfigError(key + ": delta must be an integer >= 2 or \"inf\"");
}

Json normalization_json(const Normalization& n) {
  return Json{{"mean", n.mean}, {"std", n.stddev}};
}

Normalization normalization_from_json(const Json& j, const std::string& path) {
  ObjectReader r(j, path);
  Normalization n;
  r.get("mean", n.mean);
  r.get("std", n.stddev);
  r.finish();
  for (float s : n.stddev)
    if (!(s > 0.0f)) throw ConfigError(path + ".std entries must be positive");
  return n;
}

void read_model(ObjectReader& r, ModelConfig& c) {
  if (r.has("preset")) {
    std::string preset;
    r.get("preset", preset);
    const auto p = ModelConfig::preset(preset);
    c.layers = p.layers, c.dim = p.dim, c.mlp_dim = p.mlp_dim, c.heads = p.heads;
  }
  r.get("layers", c.layers);
  r.get("dim", c.dim);
  r.get("mlp_dim", c.mlp_dim);
  r.get("heads", c.heads);
  c.tokenizer = get_enum(r, "tokenizer", parse_tokenizer_mode, c.tokenizer);
  r.get("patch_size", c.patch_size);
  c.pe = get_enum(r, "pe", parse_pe_mode, c.pe);
  c.head = get_enum(r, "head", parse_head_mode, c.head);
  r.get("drop_path_rate", c.drop_path_rate);
  r.get("image_size", c.image_size);
  r.get("num_classes", c.num_classes);
  if (r.has("permutation")) c.permutation = permutation_from_json(r.raw("permutation"));
}

}  // namespace

Json to_json(const PermutationMap& perm) {
  Json swaps = Json::array();
  for (const auto& [a, b] : perm.swaps()) swaps.push_back({a, b});
  return Json{{"height", perm.height()},
              {"width", perm.width()},
              {"delta", delta_json(perm.delta())},
              {"seed", perm.seed()},
              {"swaps", std::move(swaps)}};
}

PermutationMap permutation_from_json(const Json& j) {
  ObjectReader r(j, "permutation");
  int h = 0, w = 0;
  std::uint64_t seed = 0;
  std::vector<PermutationMap::Swap> swaps;
  r.get("height", h);
  r.get("width", w);
  r.get("seed", seed);
  r.get("swaps", swaps);
  std::optional<int> delta;
  if (r.has("delta")) delta = delta_from_json(r.raw("delta"), "permutation.delta");
  r.finish();
  try {
    return PermutationMap::from_swaps(h, w, delta, seed, std::move(swaps));
  } catch (const FormatError& e) {
    throw ConfigError(std::string("permutation: ") + e.what());
  }
}

Json to_json(const ModelConfig& c) {
  Json j{{"layers", c.layers},
         {"dim", c.dim},
         {"mlp_dim", c.mlp_dim},
         {"heads", c.heads},
         {"tokenizer", to_string(c.tokenizer)},
         {"patch_size", c.patch_size},
         {"pe", to_string(c.pe)},
         {"head", to_string(c.head)},
         {"drop_path_rate", c.drop_path_rate},
         {"image_size", c.image_size},
         {"num_classes", c.num_classes}};
  if (c.permutation) j["permutation"] = to_json(*c.permutation);
  return j;
}

ModelConfig model_config_from_json(const Json& j) {
  ObjectReader r(j, "model");
  ModelConfig c;
  read_model(r, c);
  r.finish();
  return c;
}

Json to_json(const MaeConfig& c) {
  return Json{{"mask_ratio", c.mask_ratio},
              {"decoder_layers", c.decoder_layers},
              {"decoder_dim", c.decoder_dim},
              {"decoder_heads", c.decoder_heads},
              {"seed", c.seed}};
}

MaeConfig mae_config_from_json(const Json& j) {
  ObjectReader r(j, "mae");
  MaeConfig c;
  r.get("mask_ratio", c.mask_ratio);
  r.get("decoder_layers", c.decoder_layers);
  r.get("decoder_dim", c.decoder_dim);
  r.get("decoder_heads", c.decoder_heads);
  r.get("seed", c.seed);
  r.finish();
  return c;
}

Json to_json(const ExperimentConfig& cfg) {
  Json j;
  j["study"] = to_string(cfg.study);
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  j["model"] = to_json(cfg.model);
  if (!cfg.permutation_file.empty()) j["model"]["permutation_file"] = cfg.permutation_file;
  j["mae"] = to_json(cfg.mae);
  const auto& o = cfg.optimizer;
  j["optimizer"] = {{"lr", o.lr},
                    {"beta1", o.beta1},
                    {"beta2", o.beta2},
                    {"eps", o.eps},
                    {"weight_decay", o.weight_decay},
                    {"layer_decay", o.layer_decay},
                    {"grad_clip_norm", o.grad_clip_norm},
                    {"ema_decay", o.ema_decay}};
  j["schedule"] = {{"epochs", cfg.schedule.total_epochs},
                   {"warmup_epochs", cfg.schedule.warmup_epochs},
                   {"min_lr", cfg.schedule.min_lr}};
  const auto& d = cfg.data;
  Json data{{"source", to_string(d.source)},
            {"kind", to_string(d.synthetic_kind)},
            {"train_count", d.train_count},
            {"val_count", d.val_count},
            {"val_same_as_train", d.val_same_as_train},
            {"image_size", d.image_size},
            {"num_classes", d.num_classes},
            {"train_path", d.train_path},
            {"val_path", d.val_path}};
  if (d.seed) data["seed"] = *d.seed;
  if (d.normalization) data["normalization"] = normalization_json(*d.normalization);
  j["data"] = std::move(data);
  const auto& a = cfg.augmentation;
  j["augmentation"] = {{"random_crop", a.random_crop},
                       {"crop_padding", a.crop_padding},
                       {"hflip_prob", a.hflip_prob},
                       {"mixup_alpha", a.mixup_alpha},
                       {"cutmix_alpha", a.cutmix_alpha},
                       {"randaug", a.randaug},
                       {"randaug_ops", a.randaug_ops},
                       {"randaug_magnitude", a.randaug_magnitude},
                       {"randaug_magnitude_std", a.randaug_magnitude_std}};
  const auto& t = cfg.train;
  j["train"] = {{"batch_size", t.batch_size},
                {"eval_interval", t.eval_interval},
                {"target_acc1", t.target_acc1},
                {"target_loss_ratio", t.target_loss_ratio},
                {"init_checkpoint", t.init_checkpoint},
                {"resume_from", t.resume_from},
                {"compare_random_init", t.compare_random_init},
                {"save_checkpoints", t.save_checkpoints}};
  Json swaps = Json::array(), deltas = Json::array();
  for (int s : cfg.permutation_study.swaps) swaps.push_back(s < 0 ? Json("max") : Json(s));
  for (auto dl : cfg.permutation_study.deltas) deltas.push_back(delta_json(dl));
  j["permutation_study"] = {{"T", swaps},
                            {"delta", deltas},
                            {"seeds", cfg.permutation_study.seeds},
                            {"include_baseline", cfg.permutation_study.include_baseline}};
  j["trend_sweep"] = {{"mode", to_string(cfg.trend_sweep.mode)},
                      {"sequence_length", cfg.trend_sweep.sequence_length},
                      {"input_size", cfg.trend_sweep.input_size},
                      {"patch_sizes", cfg.trend_sweep.patch_sizes}};
  j["lr_sweep"] = {{"lrs", cfg.lr_sweep.lrs},
                   {"steps", cfg.lr_sweep.steps},
                   {"divergence_factor", cfg.lr_sweep.divergence_factor}};
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base) {
  ObjectReader top(j, "");
  ExperimentConfig cfg;
  cfg.study = get_enum(top, "study", parse_study, cfg.study);
  top.get("seed", cfg.seed);
  top.get("output_dir", cfg.output_dir);
  cfg.output_dir = resolve(base, cfg.output_dir).string();

  if (top.has("model")) {
    ObjectReader r(top.raw("model"), "model");
    read_model(r, cfg.model);
    std::string perm_file;
    r.get("permutation_file", perm_file);
    r.finish();
    if (!perm_file.empty()) {
      cfg.permutation_file = resolve(base, perm_file).string();
      try {
        cfg.model.permutation = load_permutation(cfg.permutation_file);
      } catch (const FormatError& e) {
        throw ConfigError("model.permutation_file: " + std::string(e.what()));
      }
    }
  }
  if (top.has("mae")) cfg.mae = mae_config_from_json(top.raw("mae"));
  if (top.has("optimizer")) {
    ObjectReader r(top.raw("optimizer"), "optimizer");
    auto& o = cfg.optimizer;
    r.get("lr", o.lr);
    r.get("beta1", o.beta1);
    r.get("beta2", o.beta2);
    r.get("eps", o.eps);
    r.get("weight_decay", o.weight_decay);
    r.get("layer_decay", o.layer_decay);
    r.get("grad_clip_norm", o.grad_clip_norm);
    r.get("ema_decay", o.ema_decay);
    r.finish();
  }
  if (top.has("schedule")) {
    ObjectReader r(top.raw("schedule"), "schedule");
    r.get("epochs", cfg.schedule.total_epochs);
    r.get("warmup_epochs", cfg.schedule.warmup_epochs);
    r.get("min_lr", cfg.schedule.min_lr);
    r.finish();
  }
  if (top.has("data")) {
    ObjectReader r(top.raw("data"), "data");
    auto& d = cfg.data;
    d.source = get_enum(r, "source", parse_data_source, d.source);
    d.synthetic_kind = get_enum(r, "kind", parse_synthetic_kind, d.synthetic_kind);
    r.get("train_count", d.train_count);
    r.get("val_count", d.val_count);
    r.get("val_same_as_train", d.val_same_as_train);
    if (r.has("seed")) {
      std::uint64_t s = 0;
      r.get("seed", s);
      d.seed = s;
    }
    r.get("image_size", d.image_size);
    r.get("num_classes", d.num_classes);
    r.get("train_path", d.train_path);
    r.get("val_path", d.val_path);
    d.train_path = resolve(base, d.train_path).string();
    d.val_path = resolve(base, d.val_path).string();
    if (r.has("normalization")) {
      d.normalization = normalization_from_json(r.raw("normalization"), "data.normalization");
    }
    r.finish();
  }
  if (top.has("augmentation")) {
    ObjectReader r(top.raw("augmentation"), "augmentation");
    auto& a = cfg.augmentation;
    if (r.has("preset")) {
      std::string preset;
      r.get("preset", preset);
      if (preset == "crop_flip") {
        a = AugmentationConfig::crop_flip();
      } else if (preset != "none") {
        throw ConfigError("augmentation.preset must be crop_flip or none");
      }
    }
    r.get("random_crop", a.random_crop);
    r.get("crop_padding", a.crop_padding);
    r.get("hflip_prob", a.hflip_prob);
    r.get("mixup_alpha", a.mixup_alpha);
    r.get("cutmix_alpha", a.cutmix_alpha);
    r.get("randaug", a.randaug);
    r.get("randaug_ops", a.randaug_ops);
    r.get("randaug_magnitude", a.randaug_magnitude);
    r.get("randaug_magnitude_std", a.randaug_magnitude_std);
    r.finish();
  }
  if (top.has("train")) {
    ObjectReader r(top.raw("train"), "train");
    auto& t = cfg.train;
    r.get("batch_size", t.batch_size);
    r.get("eval_interval", t.eval_interval);
    r.get("target_acc1", t.target_acc1);
    r.get("target_loss_ratio", t.target_loss_ratio);
    r.get("init_checkpoint", t.init_checkpoint);
    r.get("resume_from", t.resume_from);
    r.get("compare_random_init", t.compare_random_init);
    r.get("save_checkpoints", t.save_checkpoints);
    t.init_checkpoint = resolve(base, t.init_checkpoint).string();
    t.resume_from = resolve(base, t.resume_from).string();
    r.finish();
  }
  if (top.has("permutation_study")) {
    ObjectReader r(top.raw("permutation_study"), "permutation_study");
    auto& p = cfg.permutation_study;
    if (r.has("T")) {
      const auto& list = r.raw("T");
      if (!list.is_array()) throw ConfigError("permutation_study.T must be a list");
      p.swaps.clear();
      for (const auto& v : list) {
        if (v.is_string() && v.get<std::string>() == "max") {
          p.swaps.push_back(-1);
        } else if (v.is_number_integer() && v.get<int>() >= 0) {
          p.swaps.push_back(v.get<int>());
        } else {
          throw ConfigError("permutation_study.T entries must be integers >= 0 or \"max\"");
        }
      }
    }
    if (r.has("delta")) {
      const auto& list = r.raw("delta");
      if (!list.is_array()) throw ConfigError("permutation_study.delta must be a list");
      p.deltas.clear();
      for (const auto& v : list) p.deltas.push_back(delta_from_json(v, "permutation_study.delta"));
    }
    r.get("seeds", p.seeds);
    r.get("include_baseline", p.include_baseline);
    r.finish();
  }
  if (top.has("trend_sweep")) {
    ObjectReader r(top.raw("trend_sweep"), "trend_sweep");
    auto& t = cfg.trend_sweep;
    t.mode = get_enum(r, "mode", parse_trend_mode, t.mode);
    r.get("sequence_length", t.sequence_length);
    r.get("input_size", t.input_size);
    r.get("patch_sizes", t.patch_sizes);
    r.finish();
  }
  if (top.has("lr_sweep")) {
    ObjectReader r(top.raw("lr_sweep"), "lr_sweep");
    r.get("lrs", cfg.lr_sweep.lrs);
    r.get("steps", cfg.lr_sweep.steps);
    r.get("divergence_factor", cfg.lr_sweep.divergence_factor);
    r.finish();
  }
  top.finish();
  return cfg;
}

Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ": invalid JSON: " + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto j = parse_json_text(ss.str(), path.string());
  auto cfg = experiment_config_from_json(j, path.parent_path());
  cfg.validate();
  return cfg;
}

}  // namespace pixtok
