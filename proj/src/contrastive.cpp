#include "clar/contrastive.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace clar {

ContrastiveModel::ContrastiveModel(std::size_t seq_len, Rng& rng)
    : seq_len_(seq_len),
      conv1_("enc.conv1", 1, 8, 5, 2, rng),
      conv2_("enc.conv2", 8, 16, 5, 2, rng),
      head_("enc.head", 16, kRepDim, rng),
      proj1_("proj.fc1", kRepDim, kRepDim, rng),
      proj2_("proj.fc2", kRepDim, kEmbDim, rng) {
  if (seq_len < 32) throw std::invalid_argument("encoder needs sequences of length >= 32");
}

Var ContrastiveModel::represent(Tape& t, Var x) {
  const Tensor& v = t.value(x);
  if (v.rank() != 2 || v.dim(1) != seq_len_) {
    throw std::invalid_argument("encoder input must be {batch, " + std::to_string(seq_len_) + "}");
  }
  Var h = t.reshape(x, {v.dim(0), 1, seq_len_});
  h = t.relu(conv1_.apply(t, h));
  h = t.relu(conv2_.apply(t, h));
  h = t.global_avg_pool(h);  // {B, 16}
  return head_.apply(t, h);
}

Var ContrastiveModel::project(Tape& t, Var rep) {
  Var h = t.relu(proj1_.apply(t, rep));
  return t.l2_normalize_rows(proj2_.apply(t, h));
}

Var ContrastiveModel::batch_input_(Tape& t, const std::vector<Sequence>& xs) const {
  if (xs.empty()) throw std::invalid_argument("empty batch");
  Tensor m({xs.size(), seq_len_});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != seq_len_) throw std::invalid_argument("sequence length != encoder length");
    for (std::size_t j = 0; j < seq_len_; ++j) m.at(i, j) = xs[i][j];
  }
  return t.input(std::move(m));
}

Tensor ContrastiveModel::represent_batch(const std::vector<Sequence>& xs) {
  Tape t;
  return t.value(represent(t, batch_input_(t, xs)));
}

Tensor ContrastiveModel::embed_batch(const std::vector<Sequence>& xs) {
  Tape t;
  return t.value(project(t, represent(t, batch_input_(t, xs))));
}

std::vector<Parameter*> ContrastiveModel::parameters() {
  return {&conv1_.w, &conv1_.b, &conv2_.w, &conv2_.b, &head_.w, &head_.b,
          &proj1_.w, &proj1_.b, &proj2_.w, &proj2_.b};
}

std::vector<const Parameter*> ContrastiveModel::parameters() const {
  return {&conv1_.w, &conv1_.b, &conv2_.w, &conv2_.b, &head_.w, &head_.b,
          &proj1_.w, &proj1_.b, &proj2_.w, &proj2_.b};
}

std::vector<Parameter*> ContrastiveModel::encoder_parameters() {
  return {&conv1_.w, &conv1_.b, &conv2_.w, &conv2_.b, &head_.w, &head_.b};
}

Var weighted_ntxent_loss(Tape& t, Var embeddings, const std::vector<double>& pair_weights,
                         double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const Tensor& e = t.value(embeddings);
  if (e.rank() != 2) throw std::invalid_argument("embeddings must be a matrix");
  const std::size_t rows = e.dim(0);
  if (rows < 4 || rows % 2 != 0) {
    throw std::invalid_argument("need 2M embeddings with M >= 2");
  }
  if (pair_weights.size() * 2 != rows) {
    throw std::invalid_argument("one weight per positive pair required");
  }

  Var sims = t.scale(t.matmul(embeddings, t.transpose(embeddings)), 1.0 / tau);

  // log-denominator per anchor: all similarities except self
  Tensor off_diag({rows, rows});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < rows; ++j) off_diag.at(i, j) = i == j ? 0.0 : 1.0;
  }
  Var log_denom = t.log(t.row_sum(t.mul_const(t.exp(sims), std::move(off_diag))));

  // weighted numerator exponents, both orderings of every pair
  Tensor pair_mask({rows, rows});
  for (std::size_t k = 0; k < pair_weights.size(); ++k) {
    pair_mask.at(2 * k, 2 * k + 1) = pair_weights[k];
    pair_mask.at(2 * k + 1, 2 * k) = pair_weights[k];
  }
  Var weighted_num = t.dot_const(sims, std::move(pair_mask));

  return t.scale(t.sub(t.sum(log_denom), weighted_num), 1.0 / static_cast<double>(rows));
}

double weighted_ntxent(const Tensor& embeddings, const std::vector<double>& pair_weights,
                       double tau) {
  Tape t;
  Var e = t.input(embeddings);
  return t.value(weighted_ntxent_loss(t, e, pair_weights, tau)).scalar_value();
}

}  // namespace clar
