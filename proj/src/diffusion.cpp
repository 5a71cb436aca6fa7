#include "clar/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace clar {

std::size_t NoiseSchedule::index(int t) const {
  if (t < 1 || t > steps) {
    throw std::out_of_range("diffusion step " + std::to_string(t) + " outside [1, " +
                            std::to_string(steps) + "]");
  }
  return static_cast<std::size_t>(t - 1);
}

NoiseSchedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("schedule needs at least one step");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end) {
    throw std::invalid_argument("betas must satisfy 0 < beta_start <= beta_end < 1");
  }
  if (steps > 1 && beta_start == beta_end) {
    throw std::invalid_argument("multi-step schedule needs beta_start < beta_end");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.betas.resize(static_cast<std::size_t>(steps));
  s.alphas.resize(static_cast<std::size_t>(steps));
  s.alpha_bars.resize(static_cast<std::size_t>(steps));
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    s.betas[static_cast<std::size_t>(i)] = beta;
    s.alphas[static_cast<std::size_t>(i)] = 1.0 - beta;
    prod *= 1.0 - beta;
    s.alpha_bars[static_cast<std::size_t>(i)] = prod;
  }
  return s;
}

NoiseSchedule default_schedule(int steps) { return make_schedule(steps, 1e-4, 0.02); }

Sequence forward_sample(const Sequence& z0, int t, const Sequence& eps, const NoiseSchedule& sched) {
  if (eps.size() != z0.size()) throw std::invalid_argument("noise length != signal length");
  const double ab = sched.alpha_bar(t);
  const double c0 = std::sqrt(ab);
  const double ce = std::sqrt(1.0 - ab);
  Sequence out(z0.size());
  for (std::size_t i = 0; i < z0.size(); ++i) out[i] = c0 * z0[i] + ce * eps[i];
  return out;
}

GuidanceConfig GuidanceConfig::defaults(int steps) {
  if (steps < 1) throw std::invalid_argument("guidance defaults need steps >= 1");
  GuidanceConfig cfg;
  cfg.lambda_h = 5.0 / steps;
  cfg.lambda_l = 5.0 / steps;
  cfg.n_h = 1.0;
  cfg.n_l = 1.0;
  return cfg;
}

std::pair<double, double> guidance_weights(int t, const GuidanceConfig& cfg, int steps) {
  if (t < 1 || t > steps) throw std::out_of_range("guidance step outside [1, T]");
  const double omega_h = cfg.n_h * std::exp(-cfg.lambda_h * (t - 1));
  const double omega_l = cfg.n_l * std::exp(-cfg.lambda_l * (steps - t));
  return {omega_h, omega_l};
}

Var ddpm_loss_given(Tape& tape, EpsilonNet& net, Tensor zt, Tensor eps,
                    const std::vector<int>& steps) {
  if (!net.initialized()) throw std::invalid_argument("noise predictor not initialized");
  if (!zt.same_shape(eps)) throw std::invalid_argument("noise/input shape mismatch");
  Var pred = net.apply(tape, tape.input(std::move(zt)), steps);
  Var diff = tape.sub(pred, tape.input(std::move(eps)));
  return tape.mean(tape.mul(diff, diff));
}

Var ddpm_train_loss(Tape& tape, EpsilonNet& net, const std::vector<Sequence>& batch,
                    const NoiseSchedule& sched, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (!net.initialized()) throw std::invalid_argument("noise predictor not initialized");
  const std::size_t b = batch.size();
  const std::size_t len = net.seq_len();
  Tensor zt({b, len});
  Tensor eps({b, len});
  std::vector<int> steps(b);
  for (std::size_t i = 0; i < b; ++i) {
    if (batch[i].size() != len) {
      throw std::invalid_argument("batch item length " + std::to_string(batch[i].size()) +
                                  " != model length " + std::to_string(len));
    }
    const int t = rng.uniform_int(1, sched.steps);
    steps[i] = t;
    Sequence noise(len);
    for (double& v : noise) v = rng.normal();
    const Sequence noised = forward_sample(batch[i], t, noise, sched);
    for (std::size_t j = 0; j < len; ++j) {
      zt.at(i, j) = noised[j];
      eps.at(i, j) = noise[j];
    }
  }
  return ddpm_loss_given(tape, net, std::move(zt), std::move(eps), steps);
}

Sequence reverse_step_given(const Sequence& zt, int t, const Sequence& eps_hat,
                            const NoiseSchedule& sched, Rng& rng) {
  if (eps_hat.size() != zt.size()) throw std::invalid_argument("prediction length != input length");
  const double alpha = sched.alpha(t);  // validates t >= 1
  const double ab = sched.alpha_bar(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
  const double noise_coef = (1.0 - alpha) / std::sqrt(1.0 - ab);
  Sequence out(zt.size());
  for (std::size_t i = 0; i < zt.size(); ++i) {
    out[i] = inv_sqrt_alpha * (zt[i] - noise_coef * eps_hat[i]);
  }
  if (t > 1) {
    const double s2 = sched.sigma2(t);
    for (double& v : out) v += s2 * rng.normal();
  }
  return out;
}

Sequence reverse_step(const Sequence& zt, int t, const EpsilonNet& net, const NoiseSchedule& sched,
                      Rng& rng) {
  return reverse_step_given(zt, t, net.predict(zt, t), sched, rng);
}

namespace {

Sequence noised_or_clean(const Sequence& clean, int t_minus_1, const NoiseSchedule& sched,
                         Rng& rng) {
  if (t_minus_1 == 0) return clean;
  Sequence noise(clean.size());
  for (double& v : noise) v = rng.normal();
  return forward_sample(clean, t_minus_1, noise, sched);
}

void check_generate_args(const Sequence& z_src, const EpsilonNet& net) {
  if (!net.initialized()) throw std::invalid_argument("noise predictor not initialized");
  if (z_src.size() != net.seq_len()) {
    throw std::invalid_argument("source length " + std::to_string(z_src.size()) +
                                " != model length " + std::to_string(net.seq_len()));
  }
}

Sequence sample_prior(const Sequence& z_src, const NoiseSchedule& sched, Rng& chain) {
  Sequence noise(z_src.size());
  for (double& v : noise) v = chain.normal();
  return forward_sample(z_src, sched.steps, noise, sched);
}

}  // namespace

Sequence generate_unconditional(const Sequence& z_src, const EpsilonNet& net,
                                const NoiseSchedule& sched, const Rng& rng) {
  check_generate_args(z_src, net);
  Rng chain = rng.fork("chain");
  Sequence z = sample_prior(z_src, sched, chain);
  for (int t = sched.steps; t >= 1; --t) z = reverse_step(z, t, net, sched, chain);
  return z;
}

Sequence conditioned_generate(const Sequence& z_src, const Sequence& z_ref, const EpsilonNet& net,
                              const NoiseSchedule& sched, const GuidanceConfig& cfg,
                              const Rng& rng) {
  check_generate_args(z_src, net);
  if (z_ref.size() != z_src.size()) throw std::invalid_argument("reference length != source length");
  const WaveletBands ref_bands = haar_analysis(z_ref);

  // Separate streams keep the denoising trajectory identical to the
  // unconditional sampler whenever the guidance terms vanish.
  Rng chain = rng.fork("chain");
  Rng guide = rng.fork("guidance");

  Sequence z = sample_prior(z_src, sched, chain);
  for (int t = sched.steps; t >= 1; --t) {
    Sequence z_hat = reverse_step(z, t, net, sched, chain);
    const auto [omega_h, omega_l] = guidance_weights(t, cfg, sched.steps);
    if (omega_h != 0.0 || omega_l != 0.0) {
      const WaveletBands own = haar_analysis(z_hat);
      Sequence shifted = z_hat;
      if (omega_h != 0.0) {
        const Sequence ref_h = noised_or_clean(ref_bands.high, t - 1, sched, guide);
        const Sequence merged_h = haar_analysis(warp_aggregate(z_hat, ref_h)).high;
        for (std::size_t i = 0; i < shifted.size(); ++i) {
          shifted[i] += omega_h * (merged_h[i] - own.high[i]);
        }
      }
      if (omega_l != 0.0) {
        const Sequence ref_l = noised_or_clean(ref_bands.low, t - 1, sched, guide);
        const Sequence merged_l = haar_analysis(warp_aggregate(z_hat, ref_l)).low;
        for (std::size_t i = 0; i < shifted.size(); ++i) {
          shifted[i] += omega_l * (merged_l[i] - own.low[i]);
        }
      }
      z = std::move(shifted);
    } else {
      z = std::move(z_hat);
    }
  }
  return z;
}

std::vector<DdpmTrainRow> train_ddpm(EpsilonNet& net, const std::vector<Sequence>& data,
                                     const NoiseSchedule& sched, const DdpmTrainOptions& opts,
                                     const Rng& rng, int start_step) {
  if (data.empty()) throw std::invalid_argument("no training data");
  if (opts.steps < 0 || opts.batch < 1) throw std::invalid_argument("bad training options");
  Adam opt(net.parameters(), opts.lr);
  std::vector<DdpmTrainRow> history;
  history.reserve(static_cast<std::size_t>(opts.steps));
  for (int step = start_step; step < start_step + opts.steps; ++step) {
    Rng step_rng = rng.fork("ddpm.step." + std::to_string(step));
    std::vector<Sequence> batch;
    batch.reserve(static_cast<std::size_t>(opts.batch));
    for (int k = 0; k < opts.batch; ++k) {
      batch.push_back(data[static_cast<std::size_t>(
          step_rng.uniform_int(0, static_cast<int>(data.size()) - 1))]);
    }
    Tape tape;
    Var loss = ddpm_train_loss(tape, net, batch, sched, step_rng);
    opt.zero_grad();
    tape.backward(loss);
    opt.step();
    history.push_back({step + 1, tape.value(loss).scalar_value()});
  }
  return history;
}

}  // namespace clar
