#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clar/rng.hpp"
#include "clar/signal.hpp"

namespace clar {

// Waveform recipe for one activity class: one or two Gaussian-windowed
// sinusoid strokes, optionally separated by a flat pause.
struct ActivitySpec {
  int cls = 0;
  int strokes = 1;             // 1 or 2
  double base_freq = 2.0;      // cycles per stroke
  double pause_fraction = 0.0; // of the active span, in [0, 0.4]
};

// Per-subject motion style, fixed for all of a subject's samples.
struct SubjectHabit {
  double amp_scale = 1.0;      // in [0.6, 1.4]
  double duration_scale = 1.0; // in [0.8, 1.2]
  double freq_jitter = 0.0;    // relative, per-sample uniform in [-j, +j]
};

ActivitySpec class_spec(int cls);

// One sample: flat margins, habit-scaled strokes, optional central pause,
// additive Gaussian noise. Deterministic given the rng state.
Sequence synth_waveform(const ActivitySpec& spec, const SubjectHabit& habit, int seq_len,
                        double noise_std, Rng& rng);

struct SampleRecord {
  int id = 0;
  int cls = -1;     // -1 for the static pool
  int subject = -1;
  std::string split; // train | test | static
  bool labeled = false;
  Sequence x;
};

struct Corpus {
  std::vector<SampleRecord> samples;
  std::size_t seq_len = 0;

  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> labeled_train_indices() const;
  std::vector<std::size_t> test_indices() const;
  std::vector<Sequence> static_pool() const;
  int num_classes() const;
};

struct SynthConfig {
  int num_classes = 5;
  int per_class = 50;
  int subjects = 4;
  int seq_len = 128;
  double noise_std = 0.05;
  double train_fraction = 0.8;
  double labeled_fraction = 0.25;
  int static_pool_size = 20;
};

// Stratified train/test split and labeled mask per class; includes a pool of
// pure-static sequences for template selection.
Corpus synth_generate(const SynthConfig& cfg, const Rng& rng);

// table[i] lists reference candidates for train sample i (empty for
// non-train rows): same-class train peers when i is labeled, the k nearest
// train samples by DTW when unlabeled.
using PairTable = std::vector<std::vector<int>>;
PairTable pair_candidates(const Corpus& corpus, int k);

// CSV with header sample_id,class,subject,split,labeled,t0..t{L-1}; values
// serialized with 17 significant digits so the round trip is exact.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

}  // namespace clar
