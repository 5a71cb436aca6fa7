#pragma once

#include <string>
#include <vector>

#include "clar/autodiff.hpp"
#include "clar/rng.hpp"

namespace clar {

// x{N,in} -> x.W + b, W{in,out}
struct Dense {
  Parameter w, b;

  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng);
  Var apply(Tape& t, Var x);
  std::size_t in_dim() const { return w.value.dim(0); }
  std::size_t out_dim() const { return w.value.dim(1); }
};

// x{B,Cin,L} -> y{B,Cout,(L-K)/stride+1}
struct Conv1d {
  Parameter w, b;
  int stride = 1;

  Conv1d() = default;
  Conv1d(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel,
         int stride, Rng& rng);
  Var apply(Tape& t, Var x);
};

// Sinusoidal embedding of integer step indices, one row per entry.
Tensor time_embedding(const std::vector<int>& steps, std::size_t dim);

// Noise predictor: 3 dense layers over [sequence, time embedding], tanh
// hidden activations, linear output of the sequence length.
class EpsilonNet {
 public:
  static constexpr std::size_t kTimeDim = 16;
  static constexpr std::size_t kHiddenDim = 128;

  EpsilonNet() = default;
  EpsilonNet(std::size_t seq_len, Rng& rng);

  // batched, differentiable: z{N,L}, one step index per row
  Var apply(Tape& t, Var z, const std::vector<int>& steps);

  // single sequence, plain forward (no tape); used by the samplers
  std::vector<double> predict(const std::vector<double>& z, int step) const;

  std::size_t seq_len() const { return seq_len_; }
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  bool initialized() const { return seq_len_ > 0; }

 private:
  std::size_t seq_len_ = 0;
  Dense fc1_, fc2_, fc3_;
};

}  // namespace clar
