#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clar/data.hpp"
#include "clar/diffusion.hpp"
#include "clar/signal.hpp"
#include "clar/weighting.hpp"

namespace clar {

struct ScheduleConfig {
  int steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
};

// lambda < 0 means "derive 5/steps at use time".
struct GuidanceSettings {
  double lambda_h = -1.0;
  double lambda_l = -1.0;
  double n_h = 1.0;
  double n_l = 1.0;
};

struct ContrastiveConfig {
  double tau = 0.1;
  double lr = 1e-4;
  int batch = 50;
  int epochs = 50;
  CropRange crop;
  int pair_k = 10;
  bool use_augmentation = true;
  bool use_weighting = true;
  // Diffusion augmentations are regenerated every this many epochs; crops
  // stay fresh every step regardless.
  int aug_refresh_epochs = 1;
};

struct ProbeConfig {
  int epochs = 300;
  double lr = 0.05;
};

struct AblationConfig {
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

struct PathsConfig {
  std::string out_dir = "out";
  std::string corpus;
  std::string ddpm_checkpoint;
  std::string encoder_checkpoint;
  std::string probe_checkpoint;
};

struct RunConfig {
  std::uint64_t seed = 1;
  SynthConfig data;
  ScheduleConfig schedule;
  GuidanceSettings guidance;
  DdpmTrainOptions ddpm;
  WeightingConfig weighting;
  ContrastiveConfig contrastive;
  ProbeConfig probe;
  AblationConfig ablation;
  PathsConfig paths;

  NoiseSchedule noise_schedule() const;
  GuidanceConfig guidance_config() const;

  std::string corpus_path() const;
  std::string ddpm_checkpoint_path() const;
  std::string encoder_checkpoint_path() const;
  std::string probe_checkpoint_path() const;
};

// Full-range validation of every field; throws on the first violation.
void validate_config(const RunConfig& cfg);

// Strict parse: unknown keys anywhere are rejected; missing keys keep their
// defaults; the result is validated.
RunConfig parse_config_text(const std::string& json_text);

// parse_config_text over the file contents, then the CLAR_SEED environment
// override if set.
RunConfig load_config_file(const std::string& path);

// Applies CLAR_SEED if present in the environment.
void apply_env_overrides(RunConfig& cfg);

}  // namespace clar
