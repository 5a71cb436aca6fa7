#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clar/classifier.hpp"
#include "clar/config.hpp"
#include "clar/contrastive.hpp"
#include "clar/data.hpp"
#include "clar/diffusion.hpp"
#include "clar/weighting.hpp"

namespace clar {

struct PretrainRow {
  int step = 0;
  double l_aug = 0.0;
  double l_ori = 0.0;
  double l_all = 0.0;
};

struct PretrainResult {
  ContrastiveModel model;
  std::vector<PretrainRow> history;
};

// Shared weighting state for one run: templates drawn once from the static
// pool plus the resolved window length.
struct WeightContext {
  std::vector<Sequence> templates;
  int h = 0;
  double alpha = 0.5;
  double floor = 0.0;
};

WeightContext make_weight_context(const RunConfig& cfg, const Corpus& corpus, const Rng& rng);

// Weight of one cropped view given its parent's response map.
double view_weight(const ResponseMap& parent_map, const CropWindow& crop, const WeightContext& wc);

// Contrastive pretraining over the train split. net may be null when
// cfg.contrastive.use_augmentation is false; the rng is the stage stream.
PretrainResult pretrain_encoder(const RunConfig& cfg, const Corpus& corpus, const PairTable& pairs,
                                const EpsilonNet* net, const Rng& rng);

// Linear probe on the frozen encoder over the labeled train subset.
LinearProbe finetune_probe(const RunConfig& cfg, const Corpus& corpus, ContrastiveModel& model);

Metrics evaluate_model(const Corpus& corpus, ContrastiveModel& model, const LinearProbe& probe);

struct AblationRow {
  std::string arm;   // base | aug | weight | full
  std::string seed;  // decimal seed or "mean"
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

// Four variants x all configured seeds over a fixed corpus and (for the
// aug/full arms) a fixed trained noise predictor; mean rows appended per arm.
std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Corpus& corpus,
                                      const EpsilonNet* net);

std::string ablation_csv(const std::vector<AblationRow>& rows);

// One conditioned generation for source index si: reference drawn uniformly
// from its candidate list, streams derived from the given stage rng.
Sequence augment_once(const Corpus& corpus, const PairTable& pairs, std::size_t si,
                      const EpsilonNet& net, const NoiseSchedule& sched, const GuidanceConfig& gcfg,
                      const Rng& rng, int* ref_out = nullptr);

// Mean DTW between train samples of different classes (exact, all pairs).
double mean_cross_class_dtw(const Corpus& corpus);

}  // namespace clar
