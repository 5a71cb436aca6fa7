#pragma once

#include <cstddef>
#include <vector>

#include "clar/autodiff.hpp"
#include "clar/nn.hpp"
#include "clar/rng.hpp"
#include "clar/signal.hpp"

namespace clar {

// Representation network (two strided 1-D convolutions, global average pool,
// dense head) plus the projection head used only by the contrastive loss.
class ContrastiveModel {
 public:
  static constexpr std::size_t kRepDim = 32;
  static constexpr std::size_t kEmbDim = 16;

  ContrastiveModel() = default;
  ContrastiveModel(std::size_t seq_len, Rng& rng);

  // x{B, L} -> representations {B, kRepDim}
  Var represent(Tape& t, Var x);
  // representations -> unit-norm embeddings {B, kEmbDim}
  Var project(Tape& t, Var rep);

  // Plain forward pass over a batch of sequences; rows are representations.
  Tensor represent_batch(const std::vector<Sequence>& xs);
  // Representations followed by projection; rows are unit embeddings.
  Tensor embed_batch(const std::vector<Sequence>& xs);

  std::size_t seq_len() const { return seq_len_; }
  bool initialized() const { return seq_len_ > 0; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<Parameter*> encoder_parameters();

 private:
  Var batch_input_(Tape& t, const std::vector<Sequence>& xs) const;

  std::size_t seq_len_ = 0;
  Conv1d conv1_, conv2_;
  Dense head_, proj1_, proj2_;
};

// Loss over unit embeddings where rows 2k and 2k+1 form positive pair k:
//   (1/2M) sum_i [ -W_i * sim(i, partner(i)) / tau + log sum_{k != i} exp(sim(i,k)/tau) ]
// The pair weight scales only the numerator similarity; the denominator stays
// unweighted. With all weights 1 this is the standard NT-Xent.
Var weighted_ntxent_loss(Tape& t, Var embeddings, const std::vector<double>& pair_weights,
                         double tau);

// Convenience scalar evaluation for a fixed embedding matrix {2M, d}.
double weighted_ntxent(const Tensor& embeddings, const std::vector<double>& pair_weights,
                       double tau);

}  // namespace clar
