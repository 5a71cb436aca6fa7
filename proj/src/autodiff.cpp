#include "clar/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clar {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + Tensor::shape_string(a.shape()) +
                              " and " + Tensor::shape_string(b.shape()));
}

[[noreturn]] void shape_error(const std::string& op, const Tensor& a) {
  throw std::invalid_argument(op + ": invalid shape " + Tensor::shape_string(a.shape()));
}

// c += op(a) * op(b) for row-major matrices.
void gemm_acc(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, const double* a,
              const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? a[p * m + i] : a[i * k + p];
      if (av == 0.0) continue;
      if (tb) {
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * b[j * k + p];
      } else {
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

}  // namespace

int Tape::check_(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::logic_error("Tape: variable does not belong to this tape");
  return v.id;
}

Var Tape::record_(Tensor value, bool needs_grad, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  n.back = needs_grad ? std::move(back) : nullptr;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad_buf_(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = nodes_[check_(v)];
  if (n.grad.empty()) throw std::logic_error("Tape: gradient not computed for this variable");
  return n.grad;
}

Var Tape::input(Tensor value) { return record_(std::move(value), false, nullptr); }

Var Tape::param(Parameter& p) {
  if (!p.value.same_shape(p.grad)) p.grad = Tensor(p.value.shape());
  Var v = record_(p.value, true, nullptr);
  nodes_[v.id].bound = &p;
  return v;
}

Var Tape::add(Var a, Var b) {
  const Tensor &va = value(a), &vb = value(b);
  if (!va.same_shape(vb)) shape_error("add", va, vb);
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  const int ia = check_(a), ib = check_(b), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a) || needs_(b), [ia, ib, self](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    if (t.nodes_[ia].needs_grad) {
      Tensor& ga = t.grad_buf_(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.nodes_[ib].needs_grad) {
      Tensor& gb = t.grad_buf_(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor &va = value(a), &vb = value(b);
  if (!va.same_shape(vb)) shape_error("sub", va, vb);
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  const int ia = check_(a), ib = check_(b), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a) || needs_(b), [ia, ib, self](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    if (t.nodes_[ia].needs_grad) {
      Tensor& ga = t.grad_buf_(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.nodes_[ib].needs_grad) {
      Tensor& gb = t.grad_buf_(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor &va = value(a), &vb = value(b);
  if (!va.same_shape(vb)) shape_error("mul", va, vb);
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= vb[i];
  const int ia = check_(a), ib = check_(b), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a) || needs_(b), [ia, ib, self](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    if (t.nodes_[ia].needs_grad) {
      Tensor& ga = t.grad_buf_(ia);
      const Tensor& vb2 = t.val_(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb2[i];
    }
    if (t.nodes_[ib].needs_grad) {
      Tensor& gb = t.grad_buf_(ib);
      const Tensor& va2 = t.val_(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va2[i];
    }
  });
}

Var Tape::scale(Var a, double c) {
  Tensor out = value(a);
  for (auto& v : out.vec()) v *= c;
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self, c](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var Tape::matmul(Var a, Var b) {
  const Tensor &va = value(a), &vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(0)) shape_error("matmul", va, vb);
  const std::size_t m = va.dim(0), k = va.dim(1), n = vb.dim(1);
  Tensor out({m, n});
  gemm_acc(false, false, m, n, k, va.data(), vb.data(), out.data());
  const int ia = check_(a), ib = check_(b), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a) || needs_(b), [ia, ib, self, m, n, k](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    if (t.nodes_[ia].needs_grad)  // dA += g . B^T
      gemm_acc(false, true, m, k, n, g.data(), t.val_(ib).data(), t.grad_buf_(ia).data());
    if (t.nodes_[ib].needs_grad)  // dB += A^T . g
      gemm_acc(true, false, k, n, m, t.val_(ia).data(), g.data(), t.grad_buf_(ib).data());
  });
}

Var Tape::transpose(Var a) {
  const Tensor& va = value(a);
  if (va.rank() != 2) shape_error("transpose", va);
  const std::size_t r = va.dim(0), c = va.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = va[i * c + j];
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self, r, c](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;  // shape (c, r)
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
  });
}

Var Tape::relu(Var a) {
  Tensor out = value(a);
  for (auto& v : out.vec()) v = v > 0.0 ? v : 0.0;
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& va = t.val_(ia);
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (va[i] > 0.0) ga[i] += g[i];
  });
}

Var Tape::tanh(Var a) {
  Tensor out = value(a);
  for (auto& v : out.vec()) v = std::tanh(v);
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& y = t.val_(self);
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::exp(Var a) {
  Tensor out = value(a);
  for (auto& v : out.vec()) v = std::exp(v);
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& y = t.val_(self);
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var Tape::log(Var a) {
  Tensor out = value(a);
  for (auto& v : out.vec()) {
    if (v <= 0.0) throw std::domain_error("log: non-positive input " + std::to_string(v));
    v = std::log(v);
  }
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& va = t.val_(ia);
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / va[i];
  });
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double v : value(a).vec()) s += v;
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(Tensor::scalar(s), needs_(a), [ia, self](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    Tensor& ga = t.grad_buf_(ia);
    for (auto& v : ga.vec()) v += g;
  });
}

Var Tape::mean(Var a) {
  const std::size_t n = value(a).size();
  double s = 0.0;
  for (double v : value(a).vec()) s += v;
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(Tensor::scalar(s / static_cast<double>(n)), needs_(a), [ia, self, n](Tape& t) {
    const double g = t.nodes_[self].grad[0] / static_cast<double>(n);
    Tensor& ga = t.grad_buf_(ia);
    for (auto& v : ga.vec()) v += g;
  });
}

Var Tape::row_sum(Var a) {
  const Tensor& va = value(a);
  if (va.rank() != 2) shape_error("row_sum", va);
  const std::size_t r = va.dim(0), c = va.dim(1);
  Tensor out({r});
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += va[i * c + j];
    out[i] = s;
  }
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self, r, c](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[i];
  });
}

Var Tape::l2_normalize_rows(Var a) {
  const Tensor& va = value(a);
  if (va.rank() != 1 && va.rank() != 2) shape_error("l2_normalize_rows", va);
  const std::size_t r = va.rank() == 2 ? va.dim(0) : 1;
  const std::size_t c = va.rank() == 2 ? va.dim(1) : va.dim(0);
  Tensor out = va;
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += va[i * c + j] * va[i * c + j];
    const double n = std::sqrt(s);
    if (n < 1e-30) throw std::domain_error("l2_normalize_rows: zero-norm row " + std::to_string(i));
    norms[i] = n;
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= n;
  }
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self, r, c, norms](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& y = t.val_(self);
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += y[i * c + j] * g[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        ga[i * c + j] += (g[i * c + j] - y[i * c + j] * dot) / norms[i];
    }
  });
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor &va = value(a), &vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(0) != vb.dim(0)) shape_error("concat_cols", va, vb);
  const std::size_t r = va.dim(0), p = va.dim(1), q = vb.dim(1);
  Tensor out({r, p + q});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < p; ++j) out[i * (p + q) + j] = va[i * p + j];
    for (std::size_t j = 0; j < q; ++j) out[i * (p + q) + p + j] = vb[i * q + j];
  }
  const int ia = check_(a), ib = check_(b), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a) || needs_(b), [ia, ib, self, r, p, q](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    if (t.nodes_[ia].needs_grad) {
      Tensor& ga = t.grad_buf_(ia);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < p; ++j) ga[i * p + j] += g[i * (p + q) + j];
    }
    if (t.nodes_[ib].needs_grad) {
      Tensor& gb = t.grad_buf_(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < q; ++j) gb[i * q + j] += g[i * (p + q) + p + j];
    }
  });
}

Var Tape::slice_cols(Var a, std::size_t c0, std::size_t c1) {
  const Tensor& va = value(a);
  if (va.rank() != 2 || c0 >= c1 || c1 > va.dim(1))
    throw std::invalid_argument("slice_cols: invalid range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") for shape " +
                                Tensor::shape_string(va.shape()));
  const std::size_t r = va.dim(0), c = va.dim(1), w = c1 - c0;
  Tensor out({r, w});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = va[i * c + c0 + j];
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self, r, c, c0, w](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) ga[i * c + c0 + j] += g[i * w + j];
  });
}

Var Tape::add_row_bias(Var a, Var bias) {
  const Tensor &va = value(a), &vb = value(bias);
  if (va.rank() != 2 || vb.rank() != 1 || vb.dim(0) != va.dim(1)) shape_error("add_row_bias", va, vb);
  const std::size_t r = va.dim(0), c = va.dim(1);
  Tensor out = va;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += vb[j];
  const int ia = check_(a), ib = check_(bias), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a) || needs_(bias), [ia, ib, self, r, c](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    if (t.nodes_[ia].needs_grad) {
      Tensor& ga = t.grad_buf_(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.nodes_[ib].needs_grad) {
      Tensor& gb = t.grad_buf_(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
    }
  });
}

Var Tape::reshape(Var a, std::vector<std::size_t> shape) {
  const Tensor& va = value(a);
  Tensor out(std::move(shape), va.vec());
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::conv1d(Var x, Var w, Var bias, int stride) {
  const Tensor &vx = value(x), &vw = value(w), &vb = value(bias);
  if (vx.rank() != 3 || vw.rank() != 3 || vb.rank() != 1) shape_error("conv1d", vx, vw);
  const std::size_t B = vx.dim(0), Ci = vx.dim(1), L = vx.dim(2);
  const std::size_t Co = vw.dim(0), K = vw.dim(2);
  if (vw.dim(1) != Ci || vb.dim(0) != Co) shape_error("conv1d", vx, vw);
  if (stride < 1 || L < K)
    throw std::invalid_argument("conv1d: kernel " + std::to_string(K) + " exceeds length " +
                                std::to_string(L));
  const std::size_t s = static_cast<std::size_t>(stride);
  const std::size_t Lo = (L - K) / s + 1;
  Tensor out({B, Co, Lo});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < Co; ++o)
      for (std::size_t p = 0; p < Lo; ++p) {
        double acc = vb[o];
        for (std::size_t ci = 0; ci < Ci; ++ci) {
          const double* xr = vx.data() + (b * Ci + ci) * L + p * s;
          const double* wr = vw.data() + (o * Ci + ci) * K;
          for (std::size_t k = 0; k < K; ++k) acc += xr[k] * wr[k];
        }
        out[(b * Co + o) * Lo + p] = acc;
      }
  const int ix = check_(x), iw = check_(w), ib = check_(bias);
  const int self = static_cast<int>(nodes_.size());
  const bool ng = needs_(x) || needs_(w) || needs_(bias);
  return record_(std::move(out), ng, [ix, iw, ib, self, B, Ci, L, Co, K, s, Lo](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    const Tensor& vx2 = t.val_(ix);
    const Tensor& vw2 = t.val_(iw);
    const bool nx = t.nodes_[ix].needs_grad, nw = t.nodes_[iw].needs_grad,
               nb = t.nodes_[ib].needs_grad;
    Tensor* gx = nx ? &t.grad_buf_(ix) : nullptr;
    Tensor* gw = nw ? &t.grad_buf_(iw) : nullptr;
    Tensor* gb = nb ? &t.grad_buf_(ib) : nullptr;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < Co; ++o)
        for (std::size_t p = 0; p < Lo; ++p) {
          const double go = g[(b * Co + o) * Lo + p];
          if (go == 0.0) continue;
          if (gb) (*gb)[o] += go;
          for (std::size_t ci = 0; ci < Ci; ++ci) {
            const std::size_t xoff = (b * Ci + ci) * L + p * s;
            const std::size_t woff = (o * Ci + ci) * K;
            if (gx)
              for (std::size_t k = 0; k < K; ++k) (*gx)[xoff + k] += go * vw2[woff + k];
            if (gw)
              for (std::size_t k = 0; k < K; ++k) (*gw)[woff + k] += go * vx2[xoff + k];
          }
        }
  });
}

Var Tape::global_avg_pool(Var x) {
  const Tensor& vx = value(x);
  if (vx.rank() != 3) shape_error("global_avg_pool", vx);
  const std::size_t B = vx.dim(0), C = vx.dim(1), L = vx.dim(2);
  Tensor out({B, C});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      const double* xr = vx.data() + (b * C + c) * L;
      for (std::size_t l = 0; l < L; ++l) s += xr[l];
      out[b * C + c] = s / static_cast<double>(L);
    }
  const int ix = check_(x), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(x), [ix, self, B, C, L](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& gx = t.grad_buf_(ix);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        const double gv = g[b * C + c] / static_cast<double>(L);
        double* xr = gx.data() + (b * C + c) * L;
        for (std::size_t l = 0; l < L; ++l) xr[l] += gv;
      }
  });
}

Var Tape::mul_const(Var a, Tensor mask) {
  const Tensor& va = value(a);
  if (!va.same_shape(mask)) shape_error("mul_const", va, mask);
  Tensor out = va;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(std::move(out), needs_(a), [ia, self, mask = std::move(mask)](Tape& t) {
    const Tensor& g = t.nodes_[self].grad;
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var Tape::dot_const(Var a, Tensor weights) {
  const Tensor& va = value(a);
  if (!va.same_shape(weights)) shape_error("dot_const", va, weights);
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * weights[i];
  const int ia = check_(a), self = static_cast<int>(nodes_.size());
  return record_(Tensor::scalar(s), needs_(a), [ia, self, weights = std::move(weights)](Tape& t) {
    const double g = t.nodes_[self].grad[0];
    Tensor& ga = t.grad_buf_(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * weights[i];
  });
}

Var Tape::cross_entropy_with_logits(Var logits, std::vector<int> labels) {
  const Tensor& vl = value(logits);
  if (vl.rank() != 2 || vl.dim(0) != labels.size()) shape_error("cross_entropy_with_logits", vl);
  const std::size_t N = vl.dim(0), C = vl.dim(1);
  Tensor probs({N, C});
  double loss = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= C)
      throw std::invalid_argument("cross_entropy_with_logits: label " +
                                  std::to_string(labels[i]) + " out of range for " +
                                  std::to_string(C) + " classes");
    const double* row = vl.data() + i * C;
    double mx = row[0];
    for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(row[c] - mx);
    for (std::size_t c = 0; c < C; ++c) probs[i * C + c] = std::exp(row[c] - mx) / z;
    loss += (std::log(z) + mx) - row[labels[i]];
  }
  loss /= static_cast<double>(N);
  const int il = check_(logits), self = static_cast<int>(nodes_.size());
  return record_(Tensor::scalar(loss), needs_(logits),
                 [il, self, N, C, probs = std::move(probs), labels = std::move(labels)](Tape& t) {
                   const double g = t.nodes_[self].grad[0] / static_cast<double>(N);
                   Tensor& gl = t.grad_buf_(il);
                   for (std::size_t i = 0; i < N; ++i)
                     for (std::size_t c = 0; c < C; ++c) {
                       double d = probs[i * C + c];
                       if (static_cast<std::size_t>(labels[i]) == c) d -= 1.0;
                       gl[i * C + c] += g * d;
                     }
                 });
}

void Tape::backward(Var loss) {
  const int id = check_(loss);
  if (!nodes_[id].value.is_scalar())
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                Tensor::shape_string(nodes_[id].value.shape()));
  if (backward_done_) throw std::logic_error("backward: tape already consumed; rebuild the forward pass");
  backward_done_ = true;

  grad_buf_(id)[0] = 1.0;
  for (int i = id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty() || !n.back) continue;
    n.back(*this);
  }
  for (int i = 0; i <= id; ++i) {
    Node& n = nodes_[i];
    if (n.bound && !n.grad.empty()) {
      Tensor& pg = n.bound->grad;
      for (std::size_t j = 0; j < pg.size(); ++j) pg[j] += n.grad[j];
    }
  }
}

Adam::Adam(std::vector<Parameter*> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (lr_ <= 0.0) throw std::invalid_argument("Adam: lr must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, step_);
  const double bc2 = 1.0 - std::pow(beta2_, step_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (!p.value.same_shape(p.grad))
      throw std::invalid_argument("Adam: gradient shape mismatch for " + p.name);
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      p.value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace clar
