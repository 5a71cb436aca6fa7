#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "clar/checkpoint.hpp"
#include "clar/config.hpp"
#include "clar/pipeline.hpp"

namespace {

using namespace clar;

void ensure_out_dir(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.paths.out_dir);
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed while writing " + path);
}

EpsilonNet load_epsilon_net(const RunConfig& cfg, std::size_t seq_len) {
  Rng dummy(0);
  EpsilonNet net(seq_len, dummy);
  std::vector<Parameter*> params = net.parameters();
  load_parameters(cfg.ddpm_checkpoint_path(), params);
  return net;
}

ContrastiveModel load_encoder(const RunConfig& cfg, std::size_t seq_len) {
  Rng dummy(0);
  ContrastiveModel model(seq_len, dummy);
  std::vector<Parameter*> params = model.parameters();
  load_parameters(cfg.encoder_checkpoint_path(), params);
  return model;
}

int cmd_gen_data(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  Rng master(cfg.seed);
  const Corpus corpus = synth_generate(cfg.data, master.fork("data"));
  save_corpus(corpus, cfg.corpus_path());

  nlohmann::json meta;
  meta["seed"] = cfg.seed;
  meta["num_classes"] = cfg.data.num_classes;
  meta["per_class"] = cfg.data.per_class;
  meta["subjects"] = cfg.data.subjects;
  meta["seq_len"] = cfg.data.seq_len;
  meta["noise_std"] = cfg.data.noise_std;
  meta["train_fraction"] = cfg.data.train_fraction;
  meta["labeled_fraction"] = cfg.data.labeled_fraction;
  meta["static_pool_size"] = cfg.data.static_pool_size;
  write_file(cfg.corpus_path() + ".meta.json", meta.dump(2) + "\n");

  std::cout << "wrote " << corpus.samples.size() << " rows to " << cfg.corpus_path() << "\n";
  return 0;
}

int cmd_train_ddpm(const RunConfig& cfg, bool resume) {
  ensure_out_dir(cfg);
  const Corpus corpus = load_corpus(cfg.corpus_path());
  std::vector<Sequence> train;
  for (std::size_t i : corpus.train_indices()) train.push_back(corpus.samples[i].x);

  Rng master(cfg.seed);
  Rng init = master.fork("ddpm.init");
  EpsilonNet net(corpus.seq_len, init);

  const std::string loss_path = cfg.paths.out_dir + "/ddpm_loss.csv";
  int start_step = 0;
  std::string loss_text = "step,loss\n";
  if (resume) {
    std::vector<Parameter*> params = net.parameters();
    load_parameters(cfg.ddpm_checkpoint_path(), params);
    std::ifstream prev(loss_path);
    if (prev) {
      std::string line;
      std::getline(prev, line);  // header
      loss_text.clear();
      loss_text = line + "\n";
      while (std::getline(prev, line)) {
        if (line.empty()) continue;
        loss_text += line + "\n";
        ++start_step;
      }
    }
  }

  const NoiseSchedule sched = cfg.noise_schedule();
  const std::vector<DdpmTrainRow> history =
      train_ddpm(net, train, sched, cfg.ddpm, master.fork("ddpm.train"), start_step);

  char buf[64];
  for (const DdpmTrainRow& row : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", row.step, row.loss);
    loss_text += buf;
  }
  write_file(loss_path, loss_text);
  std::vector<const Parameter*> params = const_cast<const EpsilonNet&>(net).parameters();
  save_parameters(cfg.ddpm_checkpoint_path(), params);
  if (!history.empty()) {
    std::cout << "trained " << history.size() << " steps, final loss " << history.back().loss
              << "\n";
  }
  std::cout << "checkpoint " << cfg.ddpm_checkpoint_path() << "\n";
  return 0;
}

int cmd_augment(const RunConfig& cfg, int count) {
  if (count < 1) throw std::invalid_argument("--count must be >= 1");
  ensure_out_dir(cfg);
  const Corpus corpus = load_corpus(cfg.corpus_path());
  const EpsilonNet net = load_epsilon_net(cfg, corpus.seq_len);
  const NoiseSchedule sched = cfg.noise_schedule();
  const GuidanceConfig gcfg = cfg.guidance_config();
  const PairTable pairs = pair_candidates(corpus, cfg.contrastive.pair_k);
  const std::vector<std::size_t> train = corpus.train_indices();

  Rng master(cfg.seed);
  Rng stage = master.fork("augment");

  std::string csv = "aug_id,source_id,ref_id";
  for (std::size_t j = 0; j < corpus.seq_len; ++j) csv += ",t" + std::to_string(j);
  csv += "\n";

  double dtw_src_sum = 0.0, dtw_ref_sum = 0.0;
  char buf[40];
  for (int i = 0; i < count; ++i) {
    const std::size_t si = train[static_cast<std::size_t>(i) % train.size()];
    int ref = -1;
    const Sequence aug = augment_once(corpus, pairs, si, net, sched, gcfg,
                                      stage.fork("item." + std::to_string(i)), &ref);
    dtw_src_sum += dtw_distance(aug, corpus.samples[si].x);
    dtw_ref_sum += dtw_distance(aug, corpus.samples[static_cast<std::size_t>(ref)].x);
    csv += std::to_string(i) + "," + std::to_string(corpus.samples[si].id) + "," +
           std::to_string(corpus.samples[static_cast<std::size_t>(ref)].id);
    for (double v : aug) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      csv += buf;
    }
    csv += "\n";
  }
  write_file(cfg.paths.out_dir + "/augmented.csv", csv);

  nlohmann::json summary;
  summary["count"] = count;
  summary["mean_dtw_aug_src"] = dtw_src_sum / count;
  summary["mean_dtw_aug_ref"] = dtw_ref_sum / count;
  summary["mean_cross_class_dtw"] = mean_cross_class_dtw(corpus);
  write_file(cfg.paths.out_dir + "/augment_summary.json", summary.dump(2) + "\n");
  std::cout << "wrote " << count << " augmented samples\n";
  return 0;
}

int cmd_pretrain(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const Corpus corpus = load_corpus(cfg.corpus_path());
  EpsilonNet net;
  if (cfg.contrastive.use_augmentation) net = load_epsilon_net(cfg, corpus.seq_len);
  const PairTable pairs = pair_candidates(corpus, cfg.contrastive.pair_k);

  Rng master(cfg.seed);
  PretrainResult result = pretrain_encoder(cfg, corpus, pairs,
                                           cfg.contrastive.use_augmentation ? &net : nullptr,
                                           master.fork("pretrain"));

  std::string csv = "step,l_aug,l_ori,l_all\n";
  char buf[128];
  for (const PretrainRow& row : result.history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", row.step, row.l_aug, row.l_ori,
                  row.l_all);
    csv += buf;
  }
  write_file(cfg.paths.out_dir + "/pretrain_loss.csv", csv);
  std::vector<const Parameter*> params =
      const_cast<const ContrastiveModel&>(result.model).parameters();
  save_parameters(cfg.encoder_checkpoint_path(), params);
  if (!result.history.empty()) {
    std::cout << "pretrained " << result.history.size() << " steps, final loss "
              << result.history.back().l_all << "\n";
  }
  std::cout << "checkpoint " << cfg.encoder_checkpoint_path() << "\n";
  return 0;
}

int cmd_finetune(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const Corpus corpus = load_corpus(cfg.corpus_path());
  ContrastiveModel model = load_encoder(cfg, corpus.seq_len);
  const LinearProbe probe = finetune_probe(cfg, corpus, model);
  save_parameters(cfg.probe_checkpoint_path(), {&probe.w, &probe.b});
  std::cout << "checkpoint " << cfg.probe_checkpoint_path() << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const Corpus corpus = load_corpus(cfg.corpus_path());
  ContrastiveModel model = load_encoder(cfg, corpus.seq_len);
  LinearProbe probe;
  const std::size_t d = ContrastiveModel::kRepDim;
  probe.w = Parameter("probe.w", Tensor({d, static_cast<std::size_t>(corpus.num_classes())}));
  probe.b = Parameter("probe.b", Tensor({static_cast<std::size_t>(corpus.num_classes())}));
  load_parameters(cfg.probe_checkpoint_path(), {&probe.w, &probe.b});

  const Metrics m = evaluate_model(corpus, model, probe);
  const std::string text = metrics_json(m);
  write_file(cfg.paths.out_dir + "/metrics.json", text);
  std::cout << text;
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  ensure_out_dir(cfg);
  const Corpus corpus = load_corpus(cfg.corpus_path());
  const EpsilonNet net = load_epsilon_net(cfg, corpus.seq_len);
  const std::vector<AblationRow> rows = run_ablation(cfg, corpus, &net);
  const std::string csv = ablation_csv(rows);
  write_file(cfg.paths.out_dir + "/ablation.csv", csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frequency-guided diffusion augmentation pipeline"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON config file");
  std::uint64_t seed_flag = 0;
  CLI::Option* seed_opt = app.add_option("--seed", seed_flag, "master seed override");
  std::string out_flag;
  CLI::Option* out_opt = app.add_option("--out", out_flag, "output directory override");
  std::string corpus_flag;
  CLI::Option* corpus_opt = app.add_option("--corpus", corpus_flag, "corpus CSV override");

  int diffusion_steps = 0;
  CLI::Option* t_opt = app.add_option("--diffusion-steps", diffusion_steps, "schedule steps T");
  double beta_start = 0.0, beta_end = 0.0;
  CLI::Option* bs_opt = app.add_option("--beta-start", beta_start, "schedule beta_1");
  CLI::Option* be_opt = app.add_option("--beta-end", beta_end, "schedule beta_T");
  double lambda_h = 0.0, lambda_l = 0.0, n_h = 0.0, n_l = 0.0;
  CLI::Option* lh_opt = app.add_option("--lambda-h", lambda_h, "high-band decay constant");
  CLI::Option* ll_opt = app.add_option("--lambda-l", lambda_l, "low-band growth constant");
  CLI::Option* nh_opt = app.add_option("--n-h", n_h, "high-band initial quantity");
  CLI::Option* nl_opt = app.add_option("--n-l", n_l, "low-band initial quantity");

  CLI::App* gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
  CLI::App* ddpm = app.add_subcommand("train-ddpm", "train the noise predictor");
  bool resume = false;
  ddpm->add_flag("--resume", resume, "continue from the existing checkpoint");
  int ddpm_steps = 0;
  CLI::Option* ds_opt = ddpm->add_option("--steps", ddpm_steps, "training steps");
  double ddpm_lr = 0.0;
  CLI::Option* dlr_opt = ddpm->add_option("--lr", ddpm_lr, "learning rate");
  int ddpm_batch = 0;
  CLI::Option* db_opt = ddpm->add_option("--batch", ddpm_batch, "batch size");

  CLI::App* aug = app.add_subcommand("augment", "emit conditioned generations");
  int count = 10;
  aug->add_option("--count", count, "number of augmented samples");

  CLI::App* pre = app.add_subcommand("pretrain", "contrastive encoder pretraining");
  int epochs = 0;
  CLI::Option* ep_opt = pre->add_option("--epochs", epochs, "pretraining epochs");

  CLI::App* fin = app.add_subcommand("finetune", "fit the linear probe");
  CLI::App* eva = app.add_subcommand("evaluate", "test-set metrics");
  CLI::App* abl = app.add_subcommand("ablate", "run the four-variant ablation");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config_file(config_path);
    } else {
      apply_env_overrides(cfg);
    }
    if (seed_opt->count()) cfg.seed = seed_flag;
    if (out_opt->count()) cfg.paths.out_dir = out_flag;
    if (corpus_opt->count()) cfg.paths.corpus = corpus_flag;
    if (t_opt->count()) cfg.schedule.steps = diffusion_steps;
    if (bs_opt->count()) cfg.schedule.beta_start = beta_start;
    if (be_opt->count()) cfg.schedule.beta_end = beta_end;
    if (lh_opt->count()) cfg.guidance.lambda_h = lambda_h;
    if (ll_opt->count()) cfg.guidance.lambda_l = lambda_l;
    if (nh_opt->count()) cfg.guidance.n_h = n_h;
    if (nl_opt->count()) cfg.guidance.n_l = n_l;
    if (ds_opt->count()) cfg.ddpm.steps = ddpm_steps;
    if (dlr_opt->count()) cfg.ddpm.lr = ddpm_lr;
    if (db_opt->count()) cfg.ddpm.batch = ddpm_batch;
    if (ep_opt->count()) cfg.contrastive.epochs = epochs;
    validate_config(cfg);

    if (gen->parsed()) return cmd_gen_data(cfg);
    if (ddpm->parsed()) return cmd_train_ddpm(cfg, resume);
    if (aug->parsed()) return cmd_augment(cfg, count);
    if (pre->parsed()) return cmd_pretrain(cfg);
    if (fin->parsed()) return cmd_finetune(cfg);
    if (eva->parsed()) return cmd_evaluate(cfg);
    if (abl->parsed()) return cmd_ablate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
