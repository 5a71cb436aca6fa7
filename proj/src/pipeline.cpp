#include "clar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

namespace clar {

WeightContext make_weight_context(const RunConfig& cfg, const Corpus& corpus, const Rng& rng) {
  WeightContext wc;
  wc.h = cfg.weighting.window_len > 0 ? cfg.weighting.window_len
                                      : derive_window_len(corpus.seq_len);
  wc.alpha = cfg.weighting.alpha;
  wc.floor = cfg.weighting.floor;
  Rng tr = rng.fork("templates");
  wc.templates = select_templates(corpus.static_pool(), cfg.weighting.templates, wc.h, tr);
  return wc;
}

double view_weight(const ResponseMap& parent_map, const CropWindow& crop, const WeightContext& wc) {
  const double w = sample_weight(crop_map(parent_map, wc.h, crop), wc.alpha);
  return std::max(wc.floor, w);
}

Sequence augment_once(const Corpus& corpus, const PairTable& pairs, std::size_t si,
                      const EpsilonNet& net, const NoiseSchedule& sched, const GuidanceConfig& gcfg,
                      const Rng& rng, int* ref_out) {
  if (si >= pairs.size() || pairs[si].empty()) {
    throw std::invalid_argument("no reference candidates for sample " + std::to_string(si));
  }
  Rng pick = rng.fork("ref");
  const std::vector<int>& cands = pairs[si];
  const int ref = cands[static_cast<std::size_t>(
      pick.uniform_int(0, static_cast<int>(cands.size()) - 1))];
  if (ref_out) *ref_out = ref;
  return conditioned_generate(corpus.samples[si].x, corpus.samples[static_cast<std::size_t>(ref)].x,
                              net, sched, gcfg, rng);
}

namespace {

struct AugmentEntry {
  Sequence a, b;
  ResponseMap map_a, map_b;  // filled only when weighting is on
};

}  // namespace

PretrainResult pretrain_encoder(const RunConfig& cfg, const Corpus& corpus, const PairTable& pairs,
                                const EpsilonNet* net, const Rng& rng) {
  const ContrastiveConfig& cc = cfg.contrastive;
  if (cc.use_augmentation && (net == nullptr || !net->initialized())) {
    throw std::invalid_argument("augmentation enabled but no trained noise predictor supplied");
  }
  const std::vector<std::size_t> train = corpus.train_indices();
  if (train.size() < 2) throw std::invalid_argument("need at least two training samples");
  const std::size_t seq_len = corpus.seq_len;

  Rng init = rng.fork("encoder.init");
  PretrainResult result{ContrastiveModel(seq_len, init), {}};
  ContrastiveModel& model = result.model;
  Adam opt(model.parameters(), cc.lr);

  WeightContext wc;
  std::vector<ResponseMap> ori_maps(corpus.samples.size());
  if (cc.use_weighting) {
    wc = make_weight_context(cfg, corpus, rng);
    for (std::size_t si : train) {
      ori_maps[si] = response_map(corpus.samples[si].x, wc.templates, wc.h);
    }
  }

  const NoiseSchedule sched = cc.use_augmentation ? cfg.noise_schedule() : NoiseSchedule{};
  const GuidanceConfig gcfg = cc.use_augmentation ? cfg.guidance_config() : GuidanceConfig{};
  std::vector<AugmentEntry> aug(cc.use_augmentation ? corpus.samples.size() : 0);

  const std::size_t batch = static_cast<std::size_t>(cc.batch);
  int step = 0;
  for (int epoch = 0; epoch < cc.epochs; ++epoch) {
    if (cc.use_augmentation && epoch % cc.aug_refresh_epochs == 0) {
      const std::string tag = "aug." + std::to_string(epoch / cc.aug_refresh_epochs) + ".";
      for (std::size_t si : train) {
        AugmentEntry& e = aug[si];
        e.a = augment_once(corpus, pairs, si, *net, sched, gcfg,
                           rng.fork(tag + std::to_string(si) + ".a"));
        e.b = augment_once(corpus, pairs, si, *net, sched, gcfg,
                           rng.fork(tag + std::to_string(si) + ".b"));
        if (cc.use_weighting) {
          e.map_a = response_map(e.a, wc.templates, wc.h);
          e.map_b = response_map(e.b, wc.templates, wc.h);
        }
      }
    }

    std::vector<std::size_t> order = train;
    Rng shuffle = rng.fork("pretrain.epoch." + std::to_string(epoch) + ".shuffle");
    for (std::size_t j = order.size() - 1; j > 0; --j) {
      std::swap(order[j], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<int>(j)))]);
    }

    for (std::size_t pos = 0; pos < order.size(); pos += batch) {
      const std::size_t m = std::min(batch, order.size() - pos);
      if (m < 2) break;
      Rng step_rng = rng.fork("pretrain.step." + std::to_string(step));

      Tensor aug_views({2 * m, seq_len});
      Tensor ori_views({2 * m, seq_len});
      std::vector<double> aug_weights(m, 1.0), ori_weights(m, 1.0);
      for (std::size_t k = 0; k < m; ++k) {
        const std::size_t si = order[pos + k];
        const Sequence& src = corpus.samples[si].x;

        if (cc.use_augmentation) {
          const AugmentEntry& e = aug[si];
          const CropWindow ca = draw_crop_window(seq_len, cc.crop, step_rng);
          const CropWindow cb = draw_crop_window(seq_len, cc.crop, step_rng);
          const Sequence va = extract_resize(e.a, ca, seq_len);
          const Sequence vb = extract_resize(e.b, cb, seq_len);
          for (std::size_t j = 0; j < seq_len; ++j) {
            aug_views.at(2 * k, j) = va[j];
            aug_views.at(2 * k + 1, j) = vb[j];
          }
          if (cc.use_weighting) {
            aug_weights[k] = pair_weight(view_weight(e.map_a, ca, wc), view_weight(e.map_b, cb, wc));
          }
        }

        const CropWindow ca = draw_crop_window(seq_len, cc.crop, step_rng);
        const CropWindow cb = draw_crop_window(seq_len, cc.crop, step_rng);
        const Sequence va = extract_resize(src, ca, seq_len);
        const Sequence vb = extract_resize(src, cb, seq_len);
        for (std::size_t j = 0; j < seq_len; ++j) {
          ori_views.at(2 * k, j) = va[j];
          ori_views.at(2 * k + 1, j) = vb[j];
        }
        if (cc.use_weighting) {
          ori_weights[k] =
              pair_weight(view_weight(ori_maps[si], ca, wc), view_weight(ori_maps[si], cb, wc));
        }
      }

      Tape tape;
      PretrainRow row;
      row.step = ++step;
      Var l_ori = weighted_ntxent_loss(
          tape, model.project(tape, model.represent(tape, tape.input(std::move(ori_views)))),
          ori_weights, cc.tau);
      Var total = l_ori;
      if (cc.use_augmentation) {
        Var l_aug = weighted_ntxent_loss(
            tape, model.project(tape, model.represent(tape, tape.input(std::move(aug_views)))),
            aug_weights, cc.tau);
        total = tape.add(l_aug, l_ori);
        row.l_aug = tape.value(l_aug).scalar_value();
      }
      opt.zero_grad();
      tape.backward(total);
      opt.step();
      row.l_ori = tape.value(l_ori).scalar_value();
      row.l_all = tape.value(total).scalar_value();
      result.history.push_back(row);
    }
  }
  return result;
}

LinearProbe finetune_probe(const RunConfig& cfg, const Corpus& corpus, ContrastiveModel& model) {
  const std::vector<std::size_t> labeled = corpus.labeled_train_indices();
  if (labeled.empty()) throw std::invalid_argument("no labeled training samples");
  std::vector<Sequence> xs;
  std::vector<int> ys;
  xs.reserve(labeled.size());
  for (std::size_t i : labeled) {
    xs.push_back(corpus.samples[i].x);
    ys.push_back(corpus.samples[i].cls);
  }
  ProbeOptions opts{cfg.probe.epochs, cfg.probe.lr};
  return fit_probe(model.represent_batch(xs), ys, corpus.num_classes(), opts);
}

Metrics evaluate_model(const Corpus& corpus, ContrastiveModel& model, const LinearProbe& probe) {
  const std::vector<std::size_t> test = corpus.test_indices();
  if (test.empty()) throw std::invalid_argument("empty test split");
  std::vector<Sequence> xs;
  std::vector<int> ys;
  xs.reserve(test.size());
  for (std::size_t i : test) {
    xs.push_back(corpus.samples[i].x);
    ys.push_back(corpus.samples[i].cls);
  }
  const std::vector<int> pred = probe_predict(probe, model.represent_batch(xs));
  return compute_metrics(pred, ys, corpus.num_classes());
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Corpus& corpus,
                                      const EpsilonNet* net) {
  struct Arm {
    const char* name;
    bool aug, weight;
  };
  const Arm arms[] = {{"base", false, false}, {"aug", true, false},
                      {"weight", false, true}, {"full", true, true}};

  const PairTable pairs = pair_candidates(corpus, cfg.contrastive.pair_k);
  std::vector<AblationRow> rows;
  for (const Arm& arm : arms) {
    if (arm.aug && (net == nullptr || !net->initialized())) {
      throw std::invalid_argument(std::string("ablation arm '") + arm.name +
                                  "' requires a trained noise predictor");
    }
    double acc_sum = 0.0, f1_sum = 0.0;
    for (std::uint64_t seed : cfg.ablation.seeds) {
      RunConfig arm_cfg = cfg;
      arm_cfg.seed = seed;
      arm_cfg.contrastive.use_augmentation = arm.aug;
      arm_cfg.contrastive.use_weighting = arm.weight;
      Rng master(seed);
      PretrainResult pre =
          pretrain_encoder(arm_cfg, corpus, pairs, arm.aug ? net : nullptr, master.fork("pretrain"));
      const LinearProbe probe = finetune_probe(arm_cfg, corpus, pre.model);
      const Metrics m = evaluate_model(corpus, pre.model, probe);
      rows.push_back({arm.name, std::to_string(seed), m.accuracy, m.macro_f1});
      acc_sum += m.accuracy;
      f1_sum += m.macro_f1;
    }
    const double n = static_cast<double>(cfg.ablation.seeds.size());
    rows.push_back({arm.name, "mean", acc_sum / n, f1_sum / n});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "arm,seed,accuracy,macro_f1\n";
  char buf[64];
  for (const AblationRow& r : rows) {
    out += r.arm;
    out += ',';
    out += r.seed;
    std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", r.accuracy, r.macro_f1);
    out += buf;
  }
  return out;
}

double mean_cross_class_dtw(const Corpus& corpus) {
  const std::vector<std::size_t> train = corpus.train_indices();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < train.size(); ++a) {
    for (std::size_t b = a + 1; b < train.size(); ++b) {
      const SampleRecord& sa = corpus.samples[train[a]];
      const SampleRecord& sb = corpus.samples[train[b]];
      if (sa.cls == sb.cls) continue;
      sum += dtw_distance(sa.x, sb.x);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("no cross-class train pairs");
  return sum / static_cast<double>(count);
}

}  // namespace clar
