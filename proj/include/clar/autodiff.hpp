#pragma once

#include <functional>
#include <string>
#include <vector>

#include "clar/tensor.hpp"

namespace clar {

// Trainable weight: value and accumulated gradient of identical shape.
// Gradients accumulate across backward passes; the optimizer zeroes them.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { std::fill(grad.vec().begin(), grad.vec().end(), 0.0); }
};

// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
};

// Reverse-mode autodiff over an execution tape. Ops record their result and
// a backward closure; backward() replays the closures once, in reverse
// execution order, accumulating gradients additively across fan-out.
//
// A tape is single-use: running backward a second time without rebuilding the
// forward pass throws.
class Tape {
 public:
  Var input(Tensor value);
  Var param(Parameter& p);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var relu(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sum(Var a);
  Var mean(Var a);
  Var row_sum(Var a);
  Var l2_normalize_rows(Var a);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, std::size_t c0, std::size_t c1);
  Var add_row_bias(Var a, Var bias);
  Var reshape(Var a, std::vector<std::size_t> shape);
  Var conv1d(Var x, Var w, Var bias, int stride);
  Var global_avg_pool(Var x);
  Var mul_const(Var a, Tensor mask);
  Var dot_const(Var a, Tensor weights);
  Var cross_entropy_with_logits(Var logits, std::vector<int> labels);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse, then adds
  // each bound parameter's gradient into Parameter::grad.
  void backward(Var loss);

  const Tensor& value(Var v) const { return nodes_[check_(v)].value; }
  const Tensor& grad(Var v) const;
  std::size_t num_nodes() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated on demand during backward
    std::function<void(Tape&)> back;
    Parameter* bound = nullptr;
    bool needs_grad = false;
  };

  int check_(Var v) const;
  Var record_(Tensor value, bool needs_grad, std::function<void(Tape&)> back);
  Tensor& grad_buf_(int id);
  bool has_grad_(int id) const { return !nodes_[id].grad.empty(); }
  const Tensor& val_(int id) const { return nodes_[id].value; }
  bool needs_(Var v) const { return nodes_[check_(v)].needs_grad; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Adam with bias correction. Moment state lives with the optimizer and
// persists across step() calls.
class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, double lr, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void zero_grad();
  void step();

  int step_count() const { return step_; }
  double lr() const { return lr_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  int step_ = 0;
};

}  // namespace clar
