#include "clar/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace clar {

ActivitySpec class_spec(int cls) {
  if (cls < 0) throw std::invalid_argument("class id must be non-negative");
  ActivitySpec spec;
  spec.cls = cls;
  spec.strokes = cls % 2 == 0 ? 1 : 2;
  spec.base_freq = 2.0 + static_cast<double>(cls);
  spec.pause_fraction = spec.strokes == 2 ? 0.3 : 0.0;
  return spec;
}

Sequence synth_waveform(const ActivitySpec& spec, const SubjectHabit& habit, int seq_len,
                        double noise_std, Rng& rng) {
  if (seq_len < 32) throw std::invalid_argument("waveforms need at least 32 samples");
  if (spec.strokes < 1 || spec.strokes > 2) throw std::invalid_argument("strokes must be 1 or 2");
  if (spec.pause_fraction < 0.0 || spec.pause_fraction > 0.4) {
    throw std::invalid_argument("pause fraction outside [0, 0.4]");
  }
  if (noise_std < 0.0) throw std::invalid_argument("noise_std must be non-negative");

  const int margin = static_cast<int>(std::llround(0.1 * seq_len));
  const int base_len = seq_len - 2 * margin;
  int span = static_cast<int>(std::llround(base_len * habit.duration_scale));
  span = std::clamp(span, 16, base_len);
  const int start = margin + (base_len - span) / 2;

  const double freq = spec.base_freq * (1.0 + habit.freq_jitter * rng.uniform(-1.0, 1.0));
  const double amp = habit.amp_scale * (0.9 + 0.2 * rng.uniform());

  struct Segment {
    int start, len;
  };
  std::vector<Segment> strokes;
  if (spec.strokes == 1) {
    strokes.push_back({start, span});
  } else {
    const int pause_len = static_cast<int>(std::llround(spec.pause_fraction * span));
    const int first_len = (span - pause_len) / 2;
    strokes.push_back({start, first_len});
    const int second_start = start + first_len + pause_len;
    strokes.push_back({second_start, start + span - second_start});
  }

  Sequence x(static_cast<std::size_t>(seq_len), 0.0);
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (const Segment& seg : strokes) {
    const double center = seg.start + (seg.len - 1) / 2.0;
    const double width = seg.len / 2.5;
    for (int i = seg.start; i < seg.start + seg.len; ++i) {
      const double rel = (i - center) / width;
      const double env = std::exp(-rel * rel);
      x[static_cast<std::size_t>(i)] +=
          amp * env * std::sin(two_pi * freq * (i - seg.start) / seg.len);
    }
  }
  for (double& v : x) v += noise_std * rng.normal();
  return x;
}

std::vector<std::size_t> Corpus::train_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == "train") out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Corpus::labeled_train_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == "train" && samples[i].labeled) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Corpus::test_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == "test") out.push_back(i);
  }
  return out;
}

std::vector<Sequence> Corpus::static_pool() const {
  std::vector<Sequence> out;
  for (const SampleRecord& s : samples) {
    if (s.split == "static") out.push_back(s.x);
  }
  return out;
}

int Corpus::num_classes() const {
  int max_cls = -1;
  for (const SampleRecord& s : samples) max_cls = std::max(max_cls, s.cls);
  return max_cls + 1;
}

Corpus synth_generate(const SynthConfig& cfg, const Rng& rng) {
  if (cfg.num_classes < 1 || cfg.per_class < 1 || cfg.subjects < 1 || cfg.static_pool_size < 1) {
    throw std::invalid_argument("corpus counts must be positive");
  }
  if (cfg.seq_len < 32) throw std::invalid_argument("seq_len must be >= 32");
  if (cfg.train_fraction <= 0.0 || cfg.train_fraction > 1.0) {
    throw std::invalid_argument("train_fraction outside (0, 1]");
  }
  if (cfg.labeled_fraction < 0.0 || cfg.labeled_fraction > 1.0) {
    throw std::invalid_argument("labeled_fraction outside [0, 1]");
  }
  if (cfg.noise_std < 0.0) throw std::invalid_argument("noise_std must be non-negative");

  std::vector<SubjectHabit> habits(static_cast<std::size_t>(cfg.subjects));
  for (int s = 0; s < cfg.subjects; ++s) {
    Rng hr = rng.fork("habit." + std::to_string(s));
    habits[static_cast<std::size_t>(s)] = {hr.uniform(0.6, 1.4), hr.uniform(0.8, 1.2),
                                           hr.uniform(0.0, 0.05)};
  }

  Corpus corpus;
  corpus.seq_len = static_cast<std::size_t>(cfg.seq_len);
  const int train_per_class = static_cast<int>(std::llround(cfg.train_fraction * cfg.per_class));
  int id = 0;
  for (int c = 0; c < cfg.num_classes; ++c) {
    const ActivitySpec spec = class_spec(c);
    const int labeled_count = static_cast<int>(std::llround(cfg.labeled_fraction * train_per_class));
    std::vector<int> order(static_cast<std::size_t>(train_per_class));
    for (int j = 0; j < train_per_class; ++j) order[static_cast<std::size_t>(j)] = j;
    Rng lr = rng.fork("labeled." + std::to_string(c));
    for (int j = train_per_class - 1; j > 0; --j) {
      std::swap(order[static_cast<std::size_t>(j)],
                order[static_cast<std::size_t>(lr.uniform_int(0, j))]);
    }
    std::vector<bool> labeled(static_cast<std::size_t>(train_per_class), false);
    for (int j = 0; j < labeled_count && j < train_per_class; ++j) {
      labeled[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = true;
    }

    for (int j = 0; j < cfg.per_class; ++j, ++id) {
      SampleRecord rec;
      rec.id = id;
      rec.cls = c;
      rec.subject = j % cfg.subjects;
      rec.split = j < train_per_class ? "train" : "test";
      rec.labeled = j < train_per_class && labeled[static_cast<std::size_t>(j)];
      Rng sr = rng.fork("sample." + std::to_string(id));
      rec.x = synth_waveform(spec, habits[static_cast<std::size_t>(rec.subject)], cfg.seq_len,
                             cfg.noise_std, sr);
      corpus.samples.push_back(std::move(rec));
    }
  }
  for (int p = 0; p < cfg.static_pool_size; ++p, ++id) {
    SampleRecord rec;
    rec.id = id;
    rec.split = "static";
    Rng sr = rng.fork("static." + std::to_string(p));
    rec.x.resize(static_cast<std::size_t>(cfg.seq_len));
    for (double& v : rec.x) v = cfg.noise_std * sr.normal();
    corpus.samples.push_back(std::move(rec));
  }
  return corpus;
}

PairTable pair_candidates(const Corpus& corpus, int k) {
  if (corpus.samples.empty()) throw std::invalid_argument("empty corpus");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const std::vector<std::size_t> train = corpus.train_indices();
  PairTable table(corpus.samples.size());
  for (std::size_t i : train) {
    const SampleRecord& si = corpus.samples[i];
    if (si.labeled) {
      for (std::size_t j : train) {
        if (j != i && corpus.samples[j].cls == si.cls) table[i].push_back(static_cast<int>(j));
      }
      if (table[i].empty()) {
        throw std::runtime_error("labeled sample " + std::to_string(si.id) +
                                 " has no same-class peer");
      }
    } else {
      std::vector<std::pair<double, int>> dist;
      dist.reserve(train.size());
      for (std::size_t j : train) {
        if (j == i) continue;
        dist.emplace_back(dtw_distance(si.x, corpus.samples[j].x), static_cast<int>(j));
      }
      const std::size_t keep = std::min(static_cast<std::size_t>(k), dist.size());
      std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(keep), dist.end());
      for (std::size_t r = 0; r < keep; ++r) table[i].push_back(dist[r].second);
    }
  }
  return table;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "sample_id,class,subject,split,labeled";
  for (std::size_t i = 0; i < corpus.seq_len; ++i) out << ",t" << i;
  out << "\n";
  char buf[32];
  for (const SampleRecord& s : corpus.samples) {
    out << s.id << ',' << s.cls << ',' << s.subject << ',' << s.split << ',' << (s.labeled ? 1 : 0);
    for (double v : s.x) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("failed while writing " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void bad_line(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("corpus line " + std::to_string(line_no) + ": " + what);
}

int parse_int(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) bad_line(line_no, "trailing characters in integer '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    bad_line(line_no, "bad integer '" + s + "'");
  }
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) bad_line(line_no, "trailing characters in number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    bad_line(line_no, "bad number '" + s + "'");
  }
}

}  // namespace

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw std::runtime_error(path + ": no samples");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 6 || header[0] != "sample_id") {
    throw std::runtime_error(path + ": unrecognized corpus header");
  }
  const std::size_t cols = header.size();

  Corpus corpus;
  corpus.seq_len = cols - 5;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != cols) {
      bad_line(line_no, "expected " + std::to_string(cols) + " columns, got " +
                            std::to_string(f.size()));
    }
    SampleRecord rec;
    rec.id = parse_int(f[0], line_no);
    rec.cls = parse_int(f[1], line_no);
    rec.subject = parse_int(f[2], line_no);
    rec.split = f[3];
    if (rec.split != "train" && rec.split != "test" && rec.split != "static") {
      bad_line(line_no, "unknown split '" + rec.split + "'");
    }
    const int lab = parse_int(f[4], line_no);
    if (lab != 0 && lab != 1) bad_line(line_no, "labeled flag must be 0 or 1");
    rec.labeled = lab == 1;
    rec.x.resize(corpus.seq_len);
    for (std::size_t i = 0; i < corpus.seq_len; ++i) rec.x[i] = parse_double(f[5 + i], line_no);
    corpus.samples.push_back(std::move(rec));
  }
  if (corpus.samples.empty()) throw std::runtime_error(path + ": no samples");
  return corpus;
}

}  // namespace clar
