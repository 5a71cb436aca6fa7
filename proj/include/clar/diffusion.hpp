#pragma once

#include <utility>
#include <vector>

#include "clar/autodiff.hpp"
#include "clar/nn.hpp"
#include "clar/rng.hpp"
#include "clar/signal.hpp"

namespace clar {

// Fixed variance schedule and its derived tables, 1-indexed by step t.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> betas;       // beta_t
  std::vector<double> alphas;      // 1 - beta_t
  std::vector<double> alpha_bars;  // prod_{s<=t} alpha_s

  double beta(int t) const { return betas[index(t)]; }
  double alpha(int t) const { return alphas[index(t)]; }
  double alpha_bar(int t) const { return alpha_bars[index(t)]; }
  double sigma2(int t) const { return betas[index(t)]; }  // fixed variance choice

  std::size_t index(int t) const;
};

// Linearly spaced betas from beta_start to beta_end inclusive.
NoiseSchedule make_schedule(int steps, double beta_start, double beta_end);

// Standard DDPM range beta in [1e-4, 0.02].
NoiseSchedule default_schedule(int steps);

// z_t = sqrt(alpha_bar_t) z0 + sqrt(1 - alpha_bar_t) eps
Sequence forward_sample(const Sequence& z0, int t, const Sequence& eps, const NoiseSchedule& sched);

// Step-dependent weights for the high/low frequency conditions. Both lie in
// (0,1]; as t runs from T down to 1, omega_h grows and omega_l shrinks.
struct GuidanceConfig {
  double lambda_h = 0.0;
  double lambda_l = 0.0;
  double n_h = 1.0;
  double n_l = 1.0;

  static GuidanceConfig defaults(int steps);
};

// (omega_h, omega_l) at step t:
//   omega_h(t-1) = N_h exp(-lambda_h (t-1)),  omega_l(t-1) = N_l exp(-lambda_l (T-t))
std::pair<double, double> guidance_weights(int t, const GuidanceConfig& cfg, int steps);

// Mean squared error between the given noise targets and the network's
// predictions on the given noised inputs. Differentiable through net.
Var ddpm_loss_given(Tape& tape, EpsilonNet& net, Tensor zt, Tensor eps,
                    const std::vector<int>& steps);

// ddpm_loss_given with per-item uniform t and fresh Gaussian noise.
Var ddpm_train_loss(Tape& tape, EpsilonNet& net, const std::vector<Sequence>& batch,
                    const NoiseSchedule& sched, Rng& rng);

// One denoising transition given the predicted noise; the stochastic term is
// omitted at t == 1.
Sequence reverse_step_given(const Sequence& zt, int t, const Sequence& eps_hat,
                            const NoiseSchedule& sched, Rng& rng);

// reverse_step_given with the network's prediction.
Sequence reverse_step(const Sequence& zt, int t, const EpsilonNet& net, const NoiseSchedule& sched,
                      Rng& rng);

// Plain reverse trajectory from the source-derived prior.
Sequence generate_unconditional(const Sequence& z_src, const EpsilonNet& net,
                                const NoiseSchedule& sched, const Rng& rng);

// Frequency-guided generation: runs the reverse chain from the source prior
// and nudges each latent toward the reference's noised high/low bands along
// the warping path, with weights from guidance_weights.
Sequence conditioned_generate(const Sequence& z_src, const Sequence& z_ref, const EpsilonNet& net,
                              const NoiseSchedule& sched, const GuidanceConfig& cfg,
                              const Rng& rng);

struct DdpmTrainOptions {
  int steps = 1500;
  int batch = 50;
  double lr = 1e-4;
};

struct DdpmTrainRow {
  int step;
  double loss;
};

// Adam training loop for the noise predictor; returns the per-step loss
// history. `start_step` continues a resumed run's counter.
std::vector<DdpmTrainRow> train_ddpm(EpsilonNet& net, const std::vector<Sequence>& data,
                                     const NoiseSchedule& sched, const DdpmTrainOptions& opts,
                                     const Rng& rng, int start_step = 0);

}  // namespace clar
