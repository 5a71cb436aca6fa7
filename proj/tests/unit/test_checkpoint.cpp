#include <cstdint>
#include <cstring>
#include <doctest.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "clar/checkpoint.hpp"
#include "clar/nn.hpp"

using namespace clar;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

std::string thrown_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("round trip preserves names, shapes, and exact values") {
  Parameter a("alpha", Tensor({2, 3}, {1.0, -2.5, 3.25, 0.0, 1e-300, -0.125}));
  Parameter b("beta", Tensor({4}, {9.0, 8.0, 7.0, 6.0}));
  const auto path = temp_path("clar_ckpt_roundtrip.bin");
  save_parameters(path.string(), {&a, &b});

  Parameter a2("alpha", Tensor({2, 3}));
  Parameter b2("beta", Tensor({4}));
  a2.grad.vec() = {1, 1, 1, 1, 1, 1};
  load_parameters(path.string(), {&a2, &b2});
  CHECK(a2.value.vec() == a.value.vec());
  CHECK(b2.value.vec() == b.value.vec());
  // gradients come back zeroed
  for (double g : a2.grad.vec()) CHECK(g == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("read_checkpoint exposes the stored records in order") {
  Parameter a("first", Tensor({1, 2}, {1.5, 2.5}));
  Parameter b("second", Tensor({3}, {0.0, -1.0, 4.0}));
  const auto path = temp_path("clar_ckpt_records.bin");
  save_parameters(path.string(), {&a, &b});
  const auto records = read_checkpoint(path.string());
  REQUIRE(records.size() == 2);
  CHECK(records[0].first == "first");
  CHECK(records[0].second.shape() == std::vector<std::size_t>{1, 2});
  CHECK(records[0].second.vec() == std::vector<double>{1.5, 2.5});
  CHECK(records[1].first == "second");
  CHECK(records[1].second.vec() == std::vector<double>{0.0, -1.0, 4.0});
  std::filesystem::remove(path);
}

TEST_CASE("byte layout: magic, u32 name length, u32 rank, u64 dims, f64 data") {
  Parameter p("ab", Tensor({1, 2}, {3.0, 4.0}));
  const auto path = temp_path("clar_ckpt_layout.bin");
  save_parameters(path.string(), {&p});
  const std::string bytes = read_bytes(path);
  std::filesystem::remove(path);

  // 8 magic + 4 name_len + 2 name + 4 rank + 2*8 dims + 2*8 data
  REQUIRE(bytes.size() == 8 + 4 + 2 + 4 + 16 + 16);
  CHECK(bytes.substr(0, 8) == "CLARPRM1");
  std::uint32_t name_len;
  std::memcpy(&name_len, bytes.data() + 8, 4);
  CHECK(name_len == 2);
  CHECK(bytes.substr(12, 2) == "ab");
  std::uint32_t rank;
  std::memcpy(&rank, bytes.data() + 14, 4);
  CHECK(rank == 2);
  std::uint64_t d0, d1;
  std::memcpy(&d0, bytes.data() + 18, 8);
  std::memcpy(&d1, bytes.data() + 26, 8);
  CHECK(d0 == 1);
  CHECK(d1 == 2);
  double v0, v1;
  std::memcpy(&v0, bytes.data() + 34, 8);
  std::memcpy(&v1, bytes.data() + 42, 8);
  CHECK(v0 == 3.0);
  CHECK(v1 == 4.0);
}

TEST_CASE("a trained network survives a checkpoint cycle") {
  Rng r1(701);
  EpsilonNet net(8, r1);
  const auto path = temp_path("clar_ckpt_net.bin");
  std::vector<const Parameter*> cps;
  for (Parameter* p : net.parameters()) cps.push_back(p);
  save_parameters(path.string(), cps);

  Rng r2(999);  // different init; must be fully overwritten
  EpsilonNet other(8, r2);
  load_parameters(path.string(), other.parameters());
  const std::vector<double> z = {0.1, -0.2, 0.3, 0.0, 1.0, -1.0, 0.5, 0.25};
  CHECK(net.predict(z, 3) == other.predict(z, 3));
  std::filesystem::remove(path);
}

TEST_CASE("failure modes") {
  const auto path = temp_path("clar_ckpt_bad.bin");

  SUBCASE("missing file") {
    CHECK_THROWS_AS(read_checkpoint("/nonexistent/x.ckpt"), std::runtime_error);
  }
  SUBCASE("bad magic") {
    std::ofstream(path, std::ios::binary) << "NOTMAGIC and more";
    const std::string msg = thrown_message([&] { (void)read_checkpoint(path.string()); });
    CHECK(msg.find("magic") != std::string::npos);
  }
  SUBCASE("truncated mid-record") {
    Parameter p("weights", Tensor({8}, std::vector<double>(8, 1.0)));
    save_parameters(path.string(), {&p});
    const std::string bytes = read_bytes(path);
    std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() - 5);
    const std::string msg = thrown_message([&] { (void)read_checkpoint(path.string()); });
    CHECK(msg.find("truncated") != std::string::npos);
  }
  SUBCASE("missing parameter name") {
    Parameter p("present", Tensor({1}, {1.0}));
    save_parameters(path.string(), {&p});
    Parameter q("absent", Tensor({1}));
    const std::string msg =
        thrown_message([&] { load_parameters(path.string(), {&q}); });
    CHECK(msg.find("absent") != std::string::npos);
    CHECK(msg.find("missing") != std::string::npos);
  }
  SUBCASE("shape mismatch") {
    Parameter p("w", Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0}));
    save_parameters(path.string(), {&p});
    Parameter q("w", Tensor({4}));
    const std::string msg =
        thrown_message([&] { load_parameters(path.string(), {&q}); });
    CHECK(msg.find("shape mismatch") != std::string::npos);
  }
  std::error_code ec;
  std::filesystem::remove(path, ec);
}
