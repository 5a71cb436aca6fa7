#include <cmath>
#include <doctest.h>
#include <stdexcept>

#include "clar/diffusion.hpp"
#include "gradcheck.hpp"

using namespace clar;

namespace {

Sequence rand_seq(std::size_t n, Rng& rng) {
  Sequence x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

// independent long-double recomputation of the cumulative products
std::vector<double> alpha_bar_oracle(int steps, double b0, double b1) {
  std::vector<double> out(static_cast<std::size_t>(steps));
  long double prod = 1.0L;
  for (int i = 0; i < steps; ++i) {
    const long double frac = steps == 1 ? 0.0L : static_cast<long double>(i) / (steps - 1);
    const long double beta = static_cast<long double>(b0) + (static_cast<long double>(b1) - b0) * frac;
    prod *= 1.0L - beta;
    out[static_cast<std::size_t>(i)] = static_cast<double>(prod);
  }
  return out;
}

}  // namespace

TEST_CASE("noise schedule construction") {
  SUBCASE("single step") {
    const NoiseSchedule s = make_schedule(1, 0.3, 0.3);
    CHECK(s.steps == 1);
    CHECK(s.beta(1) == 0.3);
    CHECK(s.alpha(1) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(s.alpha_bar(1) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(s.sigma2(1) == 0.3);
  }
  SUBCASE("linear spacing hits both endpoints and is strictly increasing") {
    const NoiseSchedule s = make_schedule(5, 0.1, 0.5);
    CHECK(s.beta(1) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(s.beta(3) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(s.beta(5) == doctest::Approx(0.5).epsilon(1e-15));
    for (int t = 2; t <= 5; ++t) CHECK(s.beta(t) > s.beta(t - 1));
  }
  SUBCASE("alpha_bar matches an extended-precision product") {
    const NoiseSchedule s = default_schedule(1000);
    const std::vector<double> want = alpha_bar_oracle(1000, 1e-4, 0.02);
    for (int t = 1; t <= 1000; ++t) {
      CHECK(s.alpha_bar(t) == doctest::Approx(want[static_cast<std::size_t>(t - 1)]).epsilon(1e-12));
    }
  }
  SUBCASE("shipped configurations decay below 1e-2") {
    CHECK(default_schedule(1000).alpha_bar(1000) < 0.01);
    CHECK(make_schedule(100, 1e-3, 0.09).alpha_bar(100) < 0.01);
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(make_schedule(0, 0.1, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(5, 0.0, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(5, 0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(5, 0.3, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(5, 0.2, 0.2), std::invalid_argument);
    const NoiseSchedule s = make_schedule(5, 0.1, 0.5);
    CHECK_THROWS_AS(s.beta(0), std::out_of_range);
    CHECK_THROWS_AS(s.beta(6), std::out_of_range);
  }
}

TEST_CASE("forward sampling") {
  const NoiseSchedule s = make_schedule(10, 0.05, 0.3);
  SUBCASE("explicit coefficients") {
    const Sequence z0 = {1.0, -2.0};
    const Sequence eps = {0.5, 0.25};
    const Sequence zt = forward_sample(z0, 3, eps, s);
    const std::vector<double> ab = alpha_bar_oracle(10, 0.05, 0.3);
    for (std::size_t i = 0; i < 2; ++i) {
      const double want = std::sqrt(ab[2]) * z0[i] + std::sqrt(1.0 - ab[2]) * eps[i];
      CHECK(zt[i] == doctest::Approx(want).epsilon(1e-12));
    }
  }
  SUBCASE("zero noise scales the signal") {
    const Sequence zt = forward_sample({2.0, 4.0}, 1, {0.0, 0.0}, s);
    CHECK(zt[0] == doctest::Approx(2.0 * std::sqrt(0.95)).epsilon(1e-12));
    CHECK(zt[1] == doctest::Approx(4.0 * std::sqrt(0.95)).epsilon(1e-12));
  }
  SUBCASE("sample moments match the marginal") {
    const std::vector<double> ab = alpha_bar_oracle(10, 0.05, 0.3);
    Rng rng(71);
    const int n = 20000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = forward_sample({1.0}, 7, {rng.normal()}, s)[0];
      sum += z;
      sum2 += z * z;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(mean == doctest::Approx(std::sqrt(ab[6])).epsilon(0.05));
    CHECK(var == doctest::Approx(1.0 - ab[6]).epsilon(0.05));
  }
  SUBCASE("length mismatch throws") {
    CHECK_THROWS_AS(forward_sample({1.0, 2.0}, 1, {0.0}, s), std::invalid_argument);
  }
}

TEST_CASE("guidance weights") {
  const int T = 100;
  const GuidanceConfig cfg = GuidanceConfig::defaults(T);
  CHECK(cfg.lambda_h == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(cfg.lambda_l == doctest::Approx(0.05).epsilon(1e-15));

  SUBCASE("endpoints") {
    // late steps: low-frequency condition dominates
    auto [h_at_T, l_at_T] = guidance_weights(T, cfg, T);
    CHECK(l_at_T == 1.0);
    CHECK(h_at_T == doctest::Approx(std::exp(-0.05 * 99)).epsilon(1e-12));
    // final step: high-frequency condition dominates
    auto [h_at_1, l_at_1] = guidance_weights(1, cfg, T);
    CHECK(h_at_1 == 1.0);
    CHECK(l_at_1 == doctest::Approx(std::exp(-0.05 * 99)).epsilon(1e-12));
  }
  SUBCASE("hand value mid-chain") {
    auto [h, l] = guidance_weights(50, cfg, T);
    CHECK(h == doctest::Approx(std::exp(-2.45)).epsilon(1e-12));
    CHECK(l == doctest::Approx(std::exp(-2.5)).epsilon(1e-12));
  }
  SUBCASE("monotone over the reverse chain") {
    for (int t = T; t >= 2; --t) {
      auto [h_now, l_now] = guidance_weights(t, cfg, T);
      auto [h_next, l_next] = guidance_weights(t - 1, cfg, T);
      CHECK(h_next > h_now);
      CHECK(l_next < l_now);
      CHECK(h_now > 0.0);
      CHECK(l_now <= 1.0);
    }
  }
  SUBCASE("amplitude factors scale linearly") {
    GuidanceConfig scaled = cfg;
    scaled.n_h = 0.5;
    scaled.n_l = 0.25;
    auto [h0, l0] = guidance_weights(40, cfg, T);
    auto [h1, l1] = guidance_weights(40, scaled, T);
    CHECK(h1 == doctest::Approx(0.5 * h0).epsilon(1e-15));
    CHECK(l1 == doctest::Approx(0.25 * l0).epsilon(1e-15));
  }
  SUBCASE("step range enforced") {
    CHECK_THROWS_AS(guidance_weights(0, cfg, T), std::out_of_range);
    CHECK_THROWS_AS(guidance_weights(T + 1, cfg, T), std::out_of_range);
  }
}

TEST_CASE("training loss") {
  Rng rng(81);
  EpsilonNet net(8, rng);
  const NoiseSchedule s = make_schedule(10, 0.05, 0.3);

  SUBCASE("zero when the target equals the prediction") {
    Rng d(82);
    Tensor zt({3, 8});
    for (auto& v : zt.vec()) v = d.normal();
    const std::vector<int> steps = {1, 4, 9};
    Tensor eps({3, 8});
    for (std::size_t i = 0; i < 3; ++i) {
      Sequence row(8);
      for (std::size_t j = 0; j < 8; ++j) row[j] = zt.at(i, j);
      const Sequence pred = net.predict(row, steps[i]);
      for (std::size_t j = 0; j < 8; ++j) eps.at(i, j) = pred[j];
    }
    Tape t;
    CHECK(t.value(ddpm_loss_given(t, net, zt, eps, steps)).scalar_value() == 0.0);
  }
  SUBCASE("a silent predictor scores the noise energy") {
    Rng init(83);
    EpsilonNet zero_net(8, init);
    for (Parameter* p : zero_net.parameters()) p->value = Tensor(p->value.shape());
    Rng d(84);
    const int b = 400;
    Tensor zt({static_cast<std::size_t>(b), 8});
    Tensor eps({static_cast<std::size_t>(b), 8});
    std::vector<int> steps(b, 5);
    double acc = 0.0;
    for (auto& v : zt.vec()) v = d.normal();
    for (auto& v : eps.vec()) {
      v = d.normal();
      acc += v * v;
    }
    Tape t;
    const double loss = t.value(ddpm_loss_given(t, zero_net, zt, eps, steps)).scalar_value();
    CHECK(loss == doctest::Approx(acc / (b * 8)).epsilon(1e-12));
    CHECK(loss == doctest::Approx(1.0).epsilon(0.1));
  }
  SUBCASE("differentiable end to end") {
    Rng d(85);
    Tensor zt({2, 8});
    for (auto& v : zt.vec()) v = d.normal();
    Tensor eps({2, 8});
    for (auto& v : eps.vec()) v = d.normal();
    const double worst = clar::test::gradcheck(net.parameters(), [&](Tape& t) {
      return ddpm_loss_given(t, net, zt, eps, {2, 7});
    });
    CHECK(worst < 1e-5);
  }
  SUBCASE("stochastic wrapper is deterministic per seed and finite") {
    const std::vector<Sequence> batch = {rand_seq(8, rng), rand_seq(8, rng), rand_seq(8, rng)};
    Rng r1(90), r2(90), r3(91);
    Tape t1, t2, t3;
    const double l1 = t1.value(ddpm_train_loss(t1, net, batch, s, r1)).scalar_value();
    const double l2 = t2.value(ddpm_train_loss(t2, net, batch, s, r2)).scalar_value();
    const double l3 = t3.value(ddpm_train_loss(t3, net, batch, s, r3)).scalar_value();
    CHECK(l1 == l2);
    CHECK(l1 != l3);
    CHECK(std::isfinite(l1));
    CHECK(l1 > 0.0);
    Tape t4;
    CHECK_THROWS_AS((void)ddpm_train_loss(t4, net, {}, s, r1), std::invalid_argument);
  }
}

TEST_CASE("reverse step") {
  const NoiseSchedule s = make_schedule(10, 0.05, 0.3);
  Rng rng(95);

  SUBCASE("final step inverts the first forward step exactly") {
    const Sequence z0 = rand_seq(6, rng);
    const Sequence eps = rand_seq(6, rng);
    const Sequence z1 = forward_sample(z0, 1, eps, s);
    Rng unused(1);
    const Sequence back = reverse_step_given(z1, 1, eps, s, unused);
    REQUIRE(back.size() == z0.size());
    for (std::size_t i = 0; i < z0.size(); ++i) {
      CHECK(back[i] == doctest::Approx(z0[i]).epsilon(1e-10));
    }
    // and no randomness was consumed at t == 1
    Rng fresh(1);
    CHECK(unused.normal() == fresh.normal());
  }
  SUBCASE("deterministic part matches hand coefficients, noise term uses sigma^2") {
    const Sequence zt = {1.0, -0.5};
    const Sequence eh = {0.25, 0.75};
    const int t = 4;
    const std::vector<double> ab = alpha_bar_oracle(10, 0.05, 0.3);
    const double beta = 0.05 + (0.3 - 0.05) * (3.0 / 9.0);
    const double alpha = 1.0 - beta;

    Rng r(7), mirror(7);
    const Sequence out = reverse_step_given(zt, t, eh, s, r);
    for (std::size_t i = 0; i < 2; ++i) {
      const double mean = (zt[i] - (1.0 - alpha) / std::sqrt(1.0 - ab[3]) * eh[i]) / std::sqrt(alpha);
      const double want = mean + beta * mirror.normal();
      CHECK(out[i] == doctest::Approx(want).epsilon(1e-12));
    }
  }
  SUBCASE("network wrapper consumes the same prediction") {
    Rng init(96);
    EpsilonNet net(6, init);
    const Sequence zt = rand_seq(6, rng);
    Rng r1(3), r2(3);
    const Sequence a = reverse_step(zt, 5, net, s, r1);
    const Sequence b = reverse_step_given(zt, 5, net.predict(zt, 5), s, r2);
    CHECK(a == b);
  }
  SUBCASE("length mismatch throws") {
    Rng r(1);
    CHECK_THROWS_AS(reverse_step_given({1.0, 2.0}, 1, {0.0}, s, r), std::invalid_argument);
  }
}

TEST_CASE("generation") {
  Rng init(97);
  EpsilonNet net(32, init);
  const NoiseSchedule s = make_schedule(8, 0.02, 0.25);
  Rng data(98);
  const Sequence z_src = rand_seq(32, data);
  const Sequence z_ref = rand_seq(32, data);

  SUBCASE("unconditional: deterministic per seed, length preserved, finite") {
    const Sequence a = generate_unconditional(z_src, net, s, Rng(5));
    const Sequence b = generate_unconditional(z_src, net, s, Rng(5));
    const Sequence c = generate_unconditional(z_src, net, s, Rng(6));
    CHECK(a == b);
    CHECK(a != c);
    REQUIRE(a.size() == 32);
    for (double v : a) CHECK(std::isfinite(v));
  }
  SUBCASE("zero guidance reproduces the unconditional chain bit for bit") {
    GuidanceConfig off = GuidanceConfig::defaults(s.steps);
    off.n_h = 0.0;
    off.n_l = 0.0;
    const Sequence uncond = generate_unconditional(z_src, net, s, Rng(11));
    const Sequence cond = conditioned_generate(z_src, z_ref, net, s, off, Rng(11));
    CHECK(uncond == cond);
  }
  SUBCASE("active guidance changes the trajectory but stays well formed") {
    const GuidanceConfig cfg = GuidanceConfig::defaults(s.steps);
    const Sequence uncond = generate_unconditional(z_src, net, s, Rng(12));
    const Sequence cond = conditioned_generate(z_src, z_ref, net, s, cfg, Rng(12));
    CHECK(cond != uncond);
    REQUIRE(cond.size() == 32);
    for (double v : cond) CHECK(std::isfinite(v));
    // repeatable
    CHECK(cond == conditioned_generate(z_src, z_ref, net, s, cfg, Rng(12)));
  }
  SUBCASE("length mismatch throws") {
    CHECK_THROWS_AS(generate_unconditional(rand_seq(5, data), net, s, Rng(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(conditioned_generate(rand_seq(5, data), z_ref, net, s,
                                         GuidanceConfig::defaults(s.steps), Rng(1)),
                    std::invalid_argument);
  }
}

TEST_CASE("ddpm training loop") {
  const NoiseSchedule s = make_schedule(5, 0.05, 0.3);
  Rng data(99);
  std::vector<Sequence> corpus;
  for (int i = 0; i < 6; ++i) corpus.push_back(rand_seq(8, data));

  DdpmTrainOptions opts;
  opts.steps = 40;
  opts.batch = 4;
  opts.lr = 5e-3;

  Rng i1(100), i2(100);
  EpsilonNet n1(8, i1), n2(8, i2);
  const auto h1 = train_ddpm(n1, corpus, s, opts, Rng(200));
  const auto h2 = train_ddpm(n2, corpus, s, opts, Rng(200));

  REQUIRE(h1.size() == 40);
  CHECK(h1.front().step == 1);
  CHECK(h1.back().step == 40);
  for (std::size_t i = 0; i < h1.size(); ++i) {
    CHECK(std::isfinite(h1[i].loss));
    CHECK(h1[i].loss == h2[i].loss);
  }

  // the loop actually learns: late losses fall below early ones
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 10; ++i) {
    early += h1[static_cast<std::size_t>(i)].loss;
    late += h1[h1.size() - 1 - static_cast<std::size_t>(i)].loss;
  }
  CHECK(late < early);

  // resuming continues the step counter
  const auto h3 = train_ddpm(n1, corpus, s, opts, Rng(201), 40);
  CHECK(h3.front().step == 41);
  CHECK(h3.back().step == 80);

  CHECK_THROWS_AS(train_ddpm(n1, {}, s, opts, Rng(1)), std::invalid_argument);
}
