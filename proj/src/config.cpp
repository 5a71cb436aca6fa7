#include "clar/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace clar {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& group, const std::set<std::string>& known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw std::invalid_argument("config: unknown key '" + group + it.key() + "'");
    }
  }
}

const json* maybe(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void read_num(const json& obj, const std::string& group, const std::string& key, double& out) {
  if (const json* v = maybe(obj, key)) {
    if (!v->is_number()) throw std::invalid_argument("config: '" + group + key + "' must be a number");
    out = v->get<double>();
  }
}

void read_int(const json& obj, const std::string& group, const std::string& key, int& out) {
  if (const json* v = maybe(obj, key)) {
    if (!v->is_number_integer()) {
      throw std::invalid_argument("config: '" + group + key + "' must be an integer");
    }
    out = v->get<int>();
  }
}

void read_bool(const json& obj, const std::string& group, const std::string& key, bool& out) {
  if (const json* v = maybe(obj, key)) {
    if (!v->is_boolean()) throw std::invalid_argument("config: '" + group + key + "' must be a bool");
    out = v->get<bool>();
  }
}

void read_str(const json& obj, const std::string& group, const std::string& key, std::string& out) {
  if (const json* v = maybe(obj, key)) {
    if (!v->is_string()) throw std::invalid_argument("config: '" + group + key + "' must be a string");
    out = v->get<std::string>();
  }
}

void require_object(const json& v, const std::string& name) {
  if (!v.is_object()) throw std::invalid_argument("config: '" + name + "' must be an object");
}

RunConfig from_json(const json& root) {
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(root, "", {"seed", "data", "schedule", "guidance", "ddpm", "weighting",
                            "contrastive", "probe", "ablation", "paths"});
  RunConfig cfg;

  if (const json* v = maybe(root, "seed")) {
    if (!v->is_number_unsigned() && !v->is_number_integer()) {
      throw std::invalid_argument("config: 'seed' must be a non-negative integer");
    }
    if (v->is_number_integer() && v->get<long long>() < 0) {
      throw std::invalid_argument("config: 'seed' must be non-negative");
    }
    cfg.seed = v->get<std::uint64_t>();
  }

  if (const json* g = maybe(root, "data")) {
    require_object(*g, "data");
    reject_unknown(*g, "data.",
                   {"num_classes", "per_class", "subjects", "seq_len", "noise_std",
                    "train_fraction", "labeled_fraction", "static_pool_size"});
    read_int(*g, "data.", "num_classes", cfg.data.num_classes);
    read_int(*g, "data.", "per_class", cfg.data.per_class);
    read_int(*g, "data.", "subjects", cfg.data.subjects);
    read_int(*g, "data.", "seq_len", cfg.data.seq_len);
    read_num(*g, "data.", "noise_std", cfg.data.noise_std);
    read_num(*g, "data.", "train_fraction", cfg.data.train_fraction);
    read_num(*g, "data.", "labeled_fraction", cfg.data.labeled_fraction);
    read_int(*g, "data.", "static_pool_size", cfg.data.static_pool_size);
  }

  if (const json* g = maybe(root, "schedule")) {
    require_object(*g, "schedule");
    reject_unknown(*g, "schedule.", {"steps", "beta_start", "beta_end"});
    read_int(*g, "schedule.", "steps", cfg.schedule.steps);
    read_num(*g, "schedule.", "beta_start", cfg.schedule.beta_start);
    read_num(*g, "schedule.", "beta_end", cfg.schedule.beta_end);
  }

  if (const json* g = maybe(root, "guidance")) {
    require_object(*g, "guidance");
    reject_unknown(*g, "guidance.", {"lambda_h", "lambda_l", "n_h", "n_l"});
    read_num(*g, "guidance.", "lambda_h", cfg.guidance.lambda_h);
    read_num(*g, "guidance.", "lambda_l", cfg.guidance.lambda_l);
    read_num(*g, "guidance.", "n_h", cfg.guidance.n_h);
    read_num(*g, "guidance.", "n_l", cfg.guidance.n_l);
  }

  if (const json* g = maybe(root, "ddpm")) {
    require_object(*g, "ddpm");
    reject_unknown(*g, "ddpm.", {"steps", "batch", "lr"});
    read_int(*g, "ddpm.", "steps", cfg.ddpm.steps);
    read_int(*g, "ddpm.", "batch", cfg.ddpm.batch);
    read_num(*g, "ddpm.", "lr", cfg.ddpm.lr);
  }

  if (const json* g = maybe(root, "weighting")) {
    require_object(*g, "weighting");
    reject_unknown(*g, "weighting.", {"window_len", "templates", "alpha", "floor"});
    read_int(*g, "weighting.", "window_len", cfg.weighting.window_len);
    read_int(*g, "weighting.", "templates", cfg.weighting.templates);
    read_num(*g, "weighting.", "alpha", cfg.weighting.alpha);
    read_num(*g, "weighting.", "floor", cfg.weighting.floor);
  }

  if (const json* g = maybe(root, "contrastive")) {
    require_object(*g, "contrastive");
    reject_unknown(*g, "contrastive.",
                   {"tau", "lr", "batch", "epochs", "crop_lo", "crop_hi", "pair_k", "augmentation",
                    "weighting", "aug_refresh_epochs"});
    read_num(*g, "contrastive.", "tau", cfg.contrastive.tau);
    read_num(*g, "contrastive.", "lr", cfg.contrastive.lr);
    read_int(*g, "contrastive.", "batch", cfg.contrastive.batch);
    read_int(*g, "contrastive.", "epochs", cfg.contrastive.epochs);
    read_num(*g, "contrastive.", "crop_lo", cfg.contrastive.crop.lo);
    read_num(*g, "contrastive.", "crop_hi", cfg.contrastive.crop.hi);
    read_int(*g, "contrastive.", "pair_k", cfg.contrastive.pair_k);
    read_bool(*g, "contrastive.", "augmentation", cfg.contrastive.use_augmentation);
    read_bool(*g, "contrastive.", "weighting", cfg.contrastive.use_weighting);
    read_int(*g, "contrastive.", "aug_refresh_epochs", cfg.contrastive.aug_refresh_epochs);
  }

  if (const json* g = maybe(root, "probe")) {
    require_object(*g, "probe");
    reject_unknown(*g, "probe.", {"epochs", "lr"});
    read_int(*g, "probe.", "epochs", cfg.probe.epochs);
    read_num(*g, "probe.", "lr", cfg.probe.lr);
  }

  if (const json* g = maybe(root, "ablation")) {
    require_object(*g, "ablation");
    reject_unknown(*g, "ablation.", {"seeds"});
    if (const json* v = maybe(*g, "seeds")) {
      if (!v->is_array() || v->empty()) {
        throw std::invalid_argument("config: 'ablation.seeds' must be a non-empty array");
      }
      cfg.ablation.seeds.clear();
      for (const json& s : *v) {
        if (!s.is_number_unsigned() && !s.is_number_integer()) {
          throw std::invalid_argument("config: 'ablation.seeds' entries must be integers");
        }
        if (s.is_number_integer() && s.get<long long>() < 0) {
          throw std::invalid_argument("config: 'ablation.seeds' entries must be non-negative");
        }
        cfg.ablation.seeds.push_back(s.get<std::uint64_t>());
      }
    }
  }

  if (const json* g = maybe(root, "paths")) {
    require_object(*g, "paths");
    reject_unknown(*g, "paths.",
                   {"out_dir", "corpus", "ddpm_checkpoint", "encoder_checkpoint", "probe_checkpoint"});
    read_str(*g, "paths.", "out_dir", cfg.paths.out_dir);
    read_str(*g, "paths.", "corpus", cfg.paths.corpus);
    read_str(*g, "paths.", "ddpm_checkpoint", cfg.paths.ddpm_checkpoint);
    read_str(*g, "paths.", "encoder_checkpoint", cfg.paths.encoder_checkpoint);
    read_str(*g, "paths.", "probe_checkpoint", cfg.paths.probe_checkpoint);
  }

  validate_config(cfg);
  return cfg;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("config: " + message);
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  check(cfg.data.num_classes >= 1 && cfg.data.per_class >= 1 && cfg.data.subjects >= 1 &&
            cfg.data.static_pool_size >= 1,
        "data counts must be positive");
  check(cfg.data.seq_len >= 32, "data.seq_len must be >= 32");
  check(cfg.data.noise_std >= 0.0, "data.noise_std must be non-negative");
  check(cfg.data.train_fraction > 0.0 && cfg.data.train_fraction <= 1.0,
        "data.train_fraction outside (0, 1]");
  check(cfg.data.labeled_fraction >= 0.0 && cfg.data.labeled_fraction <= 1.0,
        "data.labeled_fraction outside [0, 1]");

  check(cfg.schedule.steps >= 1, "schedule.steps must be >= 1");
  check(cfg.schedule.beta_start > 0.0 && cfg.schedule.beta_end < 1.0 &&
            cfg.schedule.beta_start <= cfg.schedule.beta_end,
        "schedule betas must satisfy 0 < beta_start <= beta_end < 1");

  check(cfg.guidance.n_h >= 0.0 && cfg.guidance.n_h <= 1.0 && cfg.guidance.n_l >= 0.0 &&
            cfg.guidance.n_l <= 1.0,
        "guidance.n_h/n_l outside [0, 1]");
  if (cfg.guidance.lambda_h >= 0.0) check(cfg.guidance.lambda_h > 0.0, "guidance.lambda_h must be positive");
  if (cfg.guidance.lambda_l >= 0.0) check(cfg.guidance.lambda_l > 0.0, "guidance.lambda_l must be positive");

  check(cfg.ddpm.steps >= 0, "ddpm.steps must be non-negative");
  check(cfg.ddpm.batch >= 1, "ddpm.batch must be >= 1");
  check(cfg.ddpm.lr > 0.0, "ddpm.lr must be positive");

  check(cfg.weighting.window_len == 0 || cfg.weighting.window_len >= 2,
        "weighting.window_len must be 0 (auto) or >= 2");
  check(cfg.weighting.templates >= 1, "weighting.templates must be >= 1");
  check(cfg.weighting.alpha > 0.0, "weighting.alpha must be positive");
  check(cfg.weighting.floor >= 0.0 && cfg.weighting.floor <= 1.0,
        "weighting.floor outside [0, 1]");

  check(cfg.contrastive.tau > 0.0, "contrastive.tau must be positive");
  check(cfg.contrastive.lr > 0.0, "contrastive.lr must be positive");
  check(cfg.contrastive.batch >= 2, "contrastive.batch must be >= 2");
  check(cfg.contrastive.epochs >= 1, "contrastive.epochs must be >= 1");
  check(cfg.contrastive.crop.lo > 0.0 && cfg.contrastive.crop.lo <= 1.0 &&
            cfg.contrastive.crop.hi > 0.0 && cfg.contrastive.crop.hi <= 1.0 &&
            cfg.contrastive.crop.lo <= cfg.contrastive.crop.hi,
        "contrastive crop fractions outside (0, 1]");
  check(cfg.contrastive.pair_k >= 1, "contrastive.pair_k must be >= 1");
  check(cfg.contrastive.aug_refresh_epochs >= 1, "contrastive.aug_refresh_epochs must be >= 1");

  check(cfg.probe.epochs >= 1, "probe.epochs must be >= 1");
  check(cfg.probe.lr > 0.0, "probe.lr must be positive");

  check(!cfg.ablation.seeds.empty(), "ablation.seeds must be non-empty");
  check(!cfg.paths.out_dir.empty(), "paths.out_dir must be non-empty");
}

NoiseSchedule RunConfig::noise_schedule() const {
  return make_schedule(schedule.steps, schedule.beta_start, schedule.beta_end);
}

GuidanceConfig RunConfig::guidance_config() const {
  GuidanceConfig g = GuidanceConfig::defaults(schedule.steps);
  if (guidance.lambda_h >= 0.0) g.lambda_h = guidance.lambda_h;
  if (guidance.lambda_l >= 0.0) g.lambda_l = guidance.lambda_l;
  g.n_h = guidance.n_h;
  g.n_l = guidance.n_l;
  return g;
}

std::string RunConfig::corpus_path() const {
  return paths.corpus.empty() ? paths.out_dir + "/corpus.csv" : paths.corpus;
}

std::string RunConfig::ddpm_checkpoint_path() const {
  return paths.ddpm_checkpoint.empty() ? paths.out_dir + "/ddpm.ckpt" : paths.ddpm_checkpoint;
}

std::string RunConfig::encoder_checkpoint_path() const {
  return paths.encoder_checkpoint.empty() ? paths.out_dir + "/encoder.ckpt"
                                          : paths.encoder_checkpoint;
}

std::string RunConfig::probe_checkpoint_path() const {
  return paths.probe_checkpoint.empty() ? paths.out_dir + "/probe.ckpt" : paths.probe_checkpoint;
}

RunConfig parse_config_text(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  return from_json(root);
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* env = std::getenv("CLAR_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      cfg.seed = static_cast<std::uint64_t>(v);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("CLAR_SEED must be a non-negative integer, got '" +
                                  std::string(env) + "'");
    }
  }
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config_text(buf.str());
  apply_env_overrides(cfg);
  return cfg;
}

}  // namespace clar
