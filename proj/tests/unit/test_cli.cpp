#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <sys/wait.h>

#include "clar/data.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd = std::string(CLAR_CLI_PATH) + " " + args + " >" + out_path.string() +
                          " 2>" + err_path.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out_path);
  r.err = read_file(err_path);
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, std::uint64_t seed) {
  const fs::path path = dir / "config.json";
  std::ofstream out(path);
  out << R"({
  "seed": )" << seed
      << R"(,
  "data": {"num_classes": 3, "per_class": 4, "subjects": 2, "seq_len": 64,
           "noise_std": 0.05, "train_fraction": 0.75, "labeled_fraction": 0.5,
           "static_pool_size": 4},
  "schedule": {"steps": 4, "beta_start": 0.05, "beta_end": 0.3},
  "ddpm": {"steps": 6, "batch": 4, "lr": 0.001},
  "contrastive": {"batch": 4, "epochs": 1, "pair_k": 3, "lr": 0.001},
  "probe": {"epochs": 30, "lr": 0.05},
  "ablation": {"seeds": [1]},
  "paths": {"out_dir": ")"
      << dir.string() << R"("}
})";
  return path;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("end-to-end workflow writes every artifact deterministically") {
  const fs::path dir = fresh_dir("clar_cli_flow");
  const fs::path cfg = write_config(dir, 5);
  const std::string base = "--config " + cfg.string() + " ";

  // corpus
  CliResult r = run_cli(base + "gen-data", dir);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "corpus.csv"));
  CHECK(r.out.find("16 rows") != std::string::npos);  // 3*4 activity + 4 static
  const nlohmann::json meta = nlohmann::json::parse(read_file(dir / "corpus.csv.meta.json"));
  CHECK(meta.at("seed") == 5);
  CHECK(meta.at("num_classes") == 3);
  CHECK(meta.at("seq_len") == 64);
  const clar::Corpus corpus = clar::load_corpus((dir / "corpus.csv").string());
  CHECK(corpus.samples.size() == 16);

  // noise model
  r = run_cli(base + "train-ddpm", dir);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "ddpm.ckpt"));
  std::string loss_csv = read_file(dir / "ddpm_loss.csv");
  CHECK(loss_csv.rfind("step,loss\n", 0) == 0);
  CHECK(count_lines(loss_csv) == 7);  // header + 6 steps
  CHECK(loss_csv.find("\n6,") != std::string::npos);

  // resume extends the log and the step counter
  r = run_cli(base + "train-ddpm --resume --steps 4", dir);
  REQUIRE(r.code == 0);
  loss_csv = read_file(dir / "ddpm_loss.csv");
  CHECK(count_lines(loss_csv) == 11);  // header + 6 + 4
  CHECK(loss_csv.find("\n10,") != std::string::npos);

  // conditioned generations
  r = run_cli(base + "augment --count 3", dir);
  REQUIRE(r.code == 0);
  const std::string aug_csv = read_file(dir / "augmented.csv");
  CHECK(aug_csv.rfind("aug_id,source_id,ref_id,t0,", 0) == 0);
  CHECK(count_lines(aug_csv) == 4);
  const nlohmann::json summary = nlohmann::json::parse(read_file(dir / "augment_summary.json"));
  CHECK(summary.at("count") == 3);
  CHECK(summary.at("mean_dtw_aug_src").get<double>() > 0.0);
  CHECK(summary.at("mean_dtw_aug_ref").get<double>() > 0.0);
  CHECK(summary.at("mean_cross_class_dtw").get<double>() > 0.0);

  // encoder
  r = run_cli(base + "pretrain", dir);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "encoder.ckpt"));
  const std::string pre_csv = read_file(dir / "pretrain_loss.csv");
  CHECK(pre_csv.rfind("step,l_aug,l_ori,l_all\n", 0) == 0);
  CHECK(count_lines(pre_csv) == 3);  // header + 2 steps (9 train, batch 4, 1 epoch)

  // probe
  r = run_cli(base + "finetune", dir);
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "probe.ckpt"));

  // metrics
  r = run_cli(base + "evaluate", dir);
  REQUIRE(r.code == 0);
  const std::string metrics_1 = read_file(dir / "metrics.json");
  CHECK(r.out == metrics_1);
  const nlohmann::json m = nlohmann::json::parse(metrics_1);
  CHECK(m.at("accuracy").get<double>() >= 0.0);
  CHECK(m.at("accuracy").get<double>() <= 1.0);
  CHECK(m.at("confusion").size() == 3);

  // evaluating again does not change a byte
  r = run_cli(base + "evaluate", dir);
  REQUIRE(r.code == 0);
  CHECK(read_file(dir / "metrics.json") == metrics_1);

  // an identical run in a fresh directory reproduces the metrics exactly
  const fs::path dir2 = fresh_dir("clar_cli_flow_repeat");
  const fs::path cfg2 = write_config(dir2, 5);
  const std::string base2 = "--config " + cfg2.string() + " ";
  REQUIRE(run_cli(base2 + "gen-data", dir2).code == 0);
  REQUIRE(run_cli(base2 + "train-ddpm", dir2).code == 0);
  REQUIRE(run_cli(base2 + "train-ddpm --resume --steps 4", dir2).code == 0);
  REQUIRE(run_cli(base2 + "pretrain", dir2).code == 0);
  REQUIRE(run_cli(base2 + "finetune", dir2).code == 0);
  REQUIRE(run_cli(base2 + "evaluate", dir2).code == 0);
  CHECK(read_file(dir2 / "metrics.json") == metrics_1);
  CHECK(read_file(dir2 / "corpus.csv") == read_file(dir / "corpus.csv"));

  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("ablation command") {
  const fs::path dir = fresh_dir("clar_cli_ablate");
  const fs::path cfg = write_config(dir, 5);
  const std::string base = "--config " + cfg.string() + " ";
  REQUIRE(run_cli(base + "gen-data", dir).code == 0);
  REQUIRE(run_cli(base + "train-ddpm", dir).code == 0);

  const CliResult r = run_cli(base + "ablate", dir);
  REQUIRE(r.code == 0);
  const std::string csv = read_file(dir / "ablation.csv");
  CHECK(r.out == csv);
  CHECK(csv.rfind("arm,seed,accuracy,macro_f1\n", 0) == 0);
  CHECK(count_lines(csv) == 9);  // header + 4 arms x (1 seed + mean)
  for (const char* arm : {"\nbase,1,", "\nbase,mean,", "\naug,1,", "\nweight,1,", "\nfull,mean,"}) {
    CHECK(csv.find(arm) != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("seed precedence: flag beats environment beats config") {
  const fs::path env_dir = fresh_dir("clar_cli_seed_env");
  const fs::path flag_dir = fresh_dir("clar_cli_seed_flag");
  const fs::path both_dir = fresh_dir("clar_cli_seed_both");

  // same effective seed through the environment and through the flag
  const fs::path cfg_env = write_config(env_dir, 5);
  setenv("CLAR_SEED", "7", 1);
  REQUIRE(run_cli("--config " + cfg_env.string() + " gen-data", env_dir).code == 0);
  unsetenv("CLAR_SEED");

  const fs::path cfg_flag = write_config(flag_dir, 5);
  REQUIRE(run_cli("--config " + cfg_flag.string() + " --seed 7 gen-data", flag_dir).code == 0);
  CHECK(read_file(env_dir / "corpus.csv") == read_file(flag_dir / "corpus.csv"));

  // the flag wins over a conflicting environment value
  const fs::path cfg_both = write_config(both_dir, 5);
  setenv("CLAR_SEED", "12345", 1);
  REQUIRE(run_cli("--config " + cfg_both.string() + " --seed 7 gen-data", both_dir).code == 0);
  unsetenv("CLAR_SEED");
  CHECK(read_file(both_dir / "corpus.csv") == read_file(flag_dir / "corpus.csv"));

  // the metadata records the effective seed
  const nlohmann::json meta = nlohmann::json::parse(read_file(both_dir / "corpus.csv.meta.json"));
  CHECK(meta.at("seed") == 7);

  fs::remove_all(env_dir);
  fs::remove_all(flag_dir);
  fs::remove_all(both_dir);
}

TEST_CASE("failure modes exit nonzero with a diagnostic") {
  const fs::path dir = fresh_dir("clar_cli_errors");
  const fs::path cfg = write_config(dir, 5);
  const std::string base = "--config " + cfg.string() + " ";

  SUBCASE("no subcommand") {
    const CliResult r = run_cli("--seed 5", dir);
    CHECK(r.code != 0);
  }
  SUBCASE("unknown subcommand") {
    const CliResult r = run_cli("frobnicate", dir);
    CHECK(r.code != 0);
  }
  SUBCASE("missing corpus") {
    const CliResult r = run_cli(base + "train-ddpm", dir);
    CHECK(r.code == 1);
    CHECK(r.err.rfind("error:", 0) == 0);
    CHECK(r.err.find("corpus.csv") != std::string::npos);
  }
  SUBCASE("missing checkpoint") {
    REQUIRE(run_cli(base + "gen-data", dir).code == 0);
    const CliResult r = run_cli(base + "augment", dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("ddpm.ckpt") != std::string::npos);
  }
  SUBCASE("invalid count") {
    REQUIRE(run_cli(base + "gen-data", dir).code == 0);
    const CliResult r = run_cli(base + "augment --count 0", dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("count") != std::string::npos);
  }
  SUBCASE("config with unknown key") {
    const fs::path bad = dir / "bad.json";
    std::ofstream(bad) << R"({"dta": {}})";
    const CliResult r = run_cli("--config " + bad.string() + " gen-data", dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("unknown key") != std::string::npos);
  }
  SUBCASE("malformed config json") {
    const fs::path bad = dir / "broken.json";
    std::ofstream(bad) << "{";
    const CliResult r = run_cli("--config " + bad.string() + " gen-data", dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("invalid JSON") != std::string::npos);
  }
  SUBCASE("flag values are validated") {
    const CliResult r = run_cli(base + "--n-h 2.0 gen-data", dir);
    CHECK(r.code == 1);
    CHECK(r.err.find("n_h") != std::string::npos);
  }
  SUBCASE("bad environment seed") {
    setenv("CLAR_SEED", "nope", 1);
    const CliResult r = run_cli(base + "gen-data", dir);
    unsetenv("CLAR_SEED");
    CHECK(r.code == 1);
    CHECK(r.err.find("CLAR_SEED") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("schedule flags reach the sampler") {
  // --diffusion-steps with inconsistent betas must fail validation cleanly
  const fs::path dir = fresh_dir("clar_cli_flags");
  const fs::path cfg = write_config(dir, 5);
  const CliResult bad =
      run_cli("--config " + cfg.string() + " --beta-start 0.5 --beta-end 0.1 gen-data", dir);
  CHECK(bad.code == 1);
  CHECK(bad.err.find("beta") != std::string::npos);

  // a valid override runs end to end
  REQUIRE(run_cli("--config " + cfg.string() + " gen-data", dir).code == 0);
  const CliResult ok = run_cli(
      "--config " + cfg.string() + " --diffusion-steps 3 --beta-start 0.1 --beta-end 0.3 train-ddpm",
      dir);
  CHECK(ok.code == 0);
  fs::remove_all(dir);
}
