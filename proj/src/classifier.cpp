#include "clar/classifier.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

namespace clar {

namespace {

void check_labels(const std::vector<int>& labels, std::size_t n, int num_classes) {
  if (labels.size() != n) throw std::invalid_argument("one label per row required");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
    }
  }
}

}  // namespace

LinearProbe fit_probe(const Tensor& embeddings, const std::vector<int>& labels, int num_classes,
                      const ProbeOptions& opts) {
  if (embeddings.rank() != 2 || embeddings.dim(0) == 0) {
    throw std::invalid_argument("embeddings must be a non-empty matrix");
  }
  if (num_classes < 1) throw std::invalid_argument("need at least one class");
  if (opts.epochs < 1) throw std::invalid_argument("need at least one epoch");
  check_labels(labels, embeddings.dim(0), num_classes);

  const std::size_t d = embeddings.dim(1);
  const std::size_t c = static_cast<std::size_t>(num_classes);
  LinearProbe probe;
  probe.w = Parameter("probe.w", Tensor({d, c}));
  probe.b = Parameter("probe.b", Tensor({c}));

  Adam opt({&probe.w, &probe.b}, opts.lr);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Tape t;
    Var x = t.input(embeddings);
    Var logits = t.add_row_bias(t.matmul(x, t.param(probe.w)), t.param(probe.b));
    Var loss = t.cross_entropy_with_logits(logits, labels);
    opt.zero_grad();
    t.backward(loss);
    opt.step();
  }
  return probe;
}

std::vector<int> probe_predict(const LinearProbe& probe, const Tensor& embeddings) {
  if (!probe.initialized()) throw std::invalid_argument("probe not fitted");
  if (embeddings.rank() != 2 || embeddings.dim(1) != probe.in_dim()) {
    throw std::invalid_argument("embedding width != probe input width");
  }
  const std::size_t n = embeddings.dim(0);
  const std::size_t c = probe.num_classes();
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    double best_score = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      double s = probe.b.value[j];
      for (std::size_t k = 0; k < probe.in_dim(); ++k) {
        s += embeddings.at(i, k) * probe.w.value.at(k, j);
      }
      if (j == 0 || s > best_score) {
        best = static_cast<int>(j);
        best_score = s;
      }
    }
    out[i] = best;
  }
  return out;
}

Metrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth,
                        int num_classes) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("prediction/label size mismatch");
  if (predicted.empty()) throw std::invalid_argument("empty evaluation set");
  check_labels(truth, truth.size(), num_classes);
  check_labels(predicted, predicted.size(), num_classes);

  const std::size_t c = static_cast<std::size_t>(num_classes);
  Metrics m;
  m.confusion.assign(c, std::vector<int>(c, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    m.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])]++;
    if (truth[i] == predicted[i]) ++correct;
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  double f1_sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    long tp = m.confusion[k][k];
    long pred_k = 0, true_k = 0;
    for (std::size_t r = 0; r < c; ++r) {
      pred_k += m.confusion[r][k];
      true_k += m.confusion[k][r];
    }
    const double precision = pred_k == 0 ? 0.0 : static_cast<double>(tp) / pred_k;
    const double recall = true_k == 0 ? 0.0 : static_cast<double>(tp) / true_k;
    const double pr = precision + recall;
    f1_sum += pr == 0.0 ? 0.0 : 2.0 * precision * recall / pr;
  }
  m.macro_f1 = f1_sum / static_cast<double>(c);
  return m;
}

std::string metrics_json(const Metrics& m) {
  char buf[64];
  std::string out = "{\n";
  std::snprintf(buf, sizeof(buf), "%.17g", m.accuracy);
  out += "  \"accuracy\": ";
  out += buf;
  out += ",\n";
  std::snprintf(buf, sizeof(buf), "%.17g", m.macro_f1);
  out += "  \"macro_f1\": ";
  out += buf;
  out += ",\n  \"confusion\": [";
  for (std::size_t i = 0; i < m.confusion.size(); ++i) {
    out += i == 0 ? "[" : ", [";
    for (std::size_t j = 0; j < m.confusion[i].size(); ++j) {
      if (j) out += ", ";
      out += std::to_string(m.confusion[i][j]);
    }
    out += "]";
  }
  out += "]\n}\n";
  return out;
}

}  // namespace clar
