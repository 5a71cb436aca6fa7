#include <cmath>
#include <doctest.h>
#include <stdexcept>

#include "clar/nn.hpp"
#include "gradcheck.hpp"

using namespace clar;

TEST_CASE("dense layer: init bounds, bias zero, forward oracle") {
  Rng rng(51);
  Dense d("fc", 3, 2, rng);
  CHECK(d.w.name == "fc.w");
  CHECK(d.b.name == "fc.b");
  REQUIRE(d.w.value.dim(0) == 3);
  REQUIRE(d.w.value.dim(1) == 2);
  const double bound = std::sqrt(6.0 / 5.0);
  for (double v : d.w.value.vec()) {
    CHECK(v >= -bound);
    CHECK(v <= bound);
  }
  for (double v : d.b.value.vec()) CHECK(v == 0.0);

  d.b.value.vec() = {0.5, -0.5};
  Tape t;
  Var x = t.input(Tensor({2, 3}, {1.0, 2.0, 3.0, -1.0, 0.0, 1.0}));
  Var y = d.apply(t, x);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      double want = d.b.value[j];
      for (std::size_t k = 0; k < 3; ++k) want += t.value(x).at(i, k) * d.w.value.at(k, j);
      CHECK(t.value(y).at(i, j) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("time embedding values") {
  const Tensor emb = time_embedding({0, 7}, 4);
  REQUIRE(emb.dim(0) == 2);
  REQUIRE(emb.dim(1) == 4);
  // step 0: sin(0)=0, cos(0)=1 at every frequency
  CHECK(emb.at(0, 0) == 0.0);
  CHECK(emb.at(0, 1) == 1.0);
  CHECK(emb.at(0, 2) == 0.0);
  CHECK(emb.at(0, 3) == 1.0);
  // step 7: frequencies 10000^{-j/2} for j=0,1
  CHECK(emb.at(1, 0) == doctest::Approx(std::sin(7.0)).epsilon(1e-15));
  CHECK(emb.at(1, 1) == doctest::Approx(std::cos(7.0)).epsilon(1e-15));
  const double f1 = std::pow(10000.0, -0.5);
  CHECK(emb.at(1, 2) == doctest::Approx(std::sin(7.0 * f1)).epsilon(1e-15));
  CHECK(emb.at(1, 3) == doctest::Approx(std::cos(7.0 * f1)).epsilon(1e-15));
  CHECK_THROWS_AS(time_embedding({1}, 3), std::invalid_argument);
}

TEST_CASE("epsilon net: construction and shape checks") {
  Rng rng(52);
  EpsilonNet net(8, rng);
  CHECK(net.initialized());
  CHECK(net.seq_len() == 8);
  CHECK(net.parameters().size() == 6);
  CHECK_FALSE(EpsilonNet().initialized());

  Tape t;
  Var z = t.input(Tensor({2, 8}));
  Var out = net.apply(t, z, {1, 5});
  CHECK(t.value(out).dim(0) == 2);
  CHECK(t.value(out).dim(1) == 8);
  CHECK_THROWS_AS((void)net.apply(t, z, {1}), std::invalid_argument);
  Var bad = t.input(Tensor({2, 7}));
  CHECK_THROWS_AS((void)net.apply(t, bad, {1, 5}), std::invalid_argument);
  CHECK_THROWS_AS(net.predict(std::vector<double>(7, 0.0), 1), std::invalid_argument);
}

TEST_CASE("epsilon net: tape and plain forward agree") {
  Rng rng(53);
  EpsilonNet net(8, rng);
  Rng data(54);
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<double> z(8);
    for (auto& v : z) v = data.normal();
    const int step = data.uniform_int(1, 1000);

    Tape t;
    Var out = net.apply(t, t.input(Tensor({1, 8}, z)), {step});
    const std::vector<double> plain = net.predict(z, step);
    REQUIRE(plain.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(t.value(out)[i] == doctest::Approx(plain[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("epsilon net: same seed gives identical parameters, different seed diverges") {
  Rng a(60), b(60), c(61);
  EpsilonNet n1(8, a), n2(8, b), n3(8, c);
  const auto p1 = n1.parameters(), p2 = n2.parameters(), p3 = n3.parameters();
  bool same_12 = true, same_13 = true;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    if (p1[i]->value.vec() != p2[i]->value.vec()) same_12 = false;
    if (p1[i]->value.vec() != p3[i]->value.vec()) same_13 = false;
  }
  CHECK(same_12);
  CHECK_FALSE(same_13);
}

TEST_CASE("epsilon net gradients check against finite differences") {
  Rng rng(55);
  EpsilonNet net(6, rng);
  Rng data(56);
  Tensor z({2, 6});
  for (auto& v : z.vec()) v = data.normal();
  Tensor mask({2, 6});
  for (auto& v : mask.vec()) v = data.uniform(-1.0, 1.0);

  const double worst = clar::test::gradcheck(net.parameters(), [&](Tape& t) {
    return t.dot_const(net.apply(t, t.input(z), {3, 9}), mask);
  });
  CHECK(worst < 1e-5);
}
