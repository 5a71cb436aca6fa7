#include "clar/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace clar {

namespace {

Tensor xavier_init(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                   Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (auto& v : t.vec()) v = rng.uniform(-s, s);
  return t;
}

}  // namespace

Dense::Dense(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : w(name + ".w", xavier_init({in, out}, in, out, rng)), b(name + ".b", Tensor({out})) {}

Var Dense::apply(Tape& t, Var x) {
  return t.add_row_bias(t.matmul(x, t.param(w)), t.param(b));
}

Conv1d::Conv1d(const std::string& name, std::size_t cin, std::size_t cout, std::size_t kernel,
               int stride_, Rng& rng)
    : w(name + ".w", xavier_init({cout, cin, kernel}, cin * kernel, cout * kernel, rng)),
      b(name + ".b", Tensor({cout})),
      stride(stride_) {}

Var Conv1d::apply(Tape& t, Var x) {
  Var wv = t.param(w);
  Var bv = t.param(b);
  return t.conv1d(x, wv, bv, stride);
}

Tensor time_embedding(const std::vector<int>& steps, std::size_t dim) {
  if (dim % 2 != 0) throw std::invalid_argument("time_embedding: dim must be even");
  Tensor out({steps.size(), dim});
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    for (std::size_t j = 0; j < half; ++j) {
      const double freq = std::pow(10000.0, -static_cast<double>(j) / static_cast<double>(half));
      const double x = static_cast<double>(steps[i]) * freq;
      out[i * dim + 2 * j] = std::sin(x);
      out[i * dim + 2 * j + 1] = std::cos(x);
    }
  }
  return out;
}

EpsilonNet::EpsilonNet(std::size_t seq_len, Rng& rng) : seq_len_(seq_len) {
  Rng r1 = rng.fork("eps.fc1");
  Rng r2 = rng.fork("eps.fc2");
  Rng r3 = rng.fork("eps.fc3");
  fc1_ = Dense("eps.fc1", seq_len + kTimeDim, kHiddenDim, r1);
  fc2_ = Dense("eps.fc2", kHiddenDim, kHiddenDim, r2);
  fc3_ = Dense("eps.fc3", kHiddenDim, seq_len, r3);
}

Var EpsilonNet::apply(Tape& t, Var z, const std::vector<int>& steps) {
  const Tensor& vz = t.value(z);
  if (vz.rank() != 2 || vz.dim(1) != seq_len_ || vz.dim(0) != steps.size())
    throw std::invalid_argument("EpsilonNet: expected shape (N," + std::to_string(seq_len_) +
                                "), got " + Tensor::shape_string(vz.shape()));
  Var emb = t.input(time_embedding(steps, kTimeDim));
  Var h = t.concat_cols(z, emb);
  h = t.tanh(fc1_.apply(t, h));
  h = t.tanh(fc2_.apply(t, h));
  return fc3_.apply(t, h);
}

std::vector<double> EpsilonNet::predict(const std::vector<double>& z, int step) const {
  if (z.size() != seq_len_)
    throw std::invalid_argument("EpsilonNet: sequence length " + std::to_string(z.size()) +
                                " != " + std::to_string(seq_len_));
  const Tensor emb = time_embedding({step}, kTimeDim);
  std::vector<double> in(seq_len_ + kTimeDim);
  std::copy(z.begin(), z.end(), in.begin());
  std::copy(emb.vec().begin(), emb.vec().end(), in.begin() + static_cast<long>(seq_len_));

  auto dense_tanh = [](const Dense& d, const std::vector<double>& x, bool act) {
    const std::size_t in_dim = d.in_dim(), out_dim = d.out_dim();
    std::vector<double> y(d.b.value.vec().begin(), d.b.value.vec().end());
    const double* wp = d.w.value.data();
    for (std::size_t i = 0; i < in_dim; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* wrow = wp + i * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) y[j] += xi * wrow[j];
    }
    if (act)
      for (auto& v : y) v = std::tanh(v);
    return y;
  };

  std::vector<double> h = dense_tanh(fc1_, in, true);
  h = dense_tanh(fc2_, h, true);
  return dense_tanh(fc3_, h, false);
}

std::vector<Parameter*> EpsilonNet::parameters() {
  return {&fc1_.w, &fc1_.b, &fc2_.w, &fc2_.b, &fc3_.w, &fc3_.b};
}

std::vector<const Parameter*> EpsilonNet::parameters() const {
  return {&fc1_.w, &fc1_.b, &fc2_.w, &fc2_.b, &fc3_.w, &fc3_.b};
}

}  // namespace clar
