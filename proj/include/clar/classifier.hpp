#pragma once

#include <string>
#include <vector>

#include "clar/autodiff.hpp"
#include "clar/tensor.hpp"

namespace clar {

// Multinomial logistic regression over frozen representations.
struct LinearProbe {
  Parameter w;  // {d, num_classes}
  Parameter b;  // {num_classes}

  bool initialized() const { return w.value.size() > 0; }
  std::size_t in_dim() const { return w.value.dim(0); }
  std::size_t num_classes() const { return w.value.dim(1); }
};

struct ProbeOptions {
  int epochs = 300;
  double lr = 0.05;
};

// Full-batch Adam on softmax cross-entropy, zero-initialized weights.
LinearProbe fit_probe(const Tensor& embeddings, const std::vector<int>& labels, int num_classes,
                      const ProbeOptions& opts);

std::vector<int> probe_predict(const LinearProbe& probe, const Tensor& embeddings);

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::vector<int>> confusion;  // [truth][predicted]
};

// Per-class F1 uses the convention F1 = 0 whenever precision + recall == 0,
// so the metrics are defined for every confusion matrix.
Metrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth,
                        int num_classes);

std::string metrics_json(const Metrics& m);

}  // namespace clar
