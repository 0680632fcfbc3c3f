#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "lrlm/checkpoint.hpp"

using namespace lrlm;

namespace {

std::string tmp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::pair<Tensor, Tensor> sample_tensors(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor a("layer.w", {3, 4});
  Tensor b("layer.b", {5});
  a.init_uniform(rng, 4);
  b.init_uniform(rng, 4);
  return {std::move(a), std::move(b)};
}

}  // namespace

TEST_CASE("checkpoint round-trips bit-exactly, including adam state") {
  auto [a, b] = sample_tensors(1);
  Adam opt({0.01});
  a.grad.assign(a.size(), 0.25);
  b.grad.assign(b.size(), -0.5);
  Tensor* ts[] = {&a, &b};
  opt.step(ts);
  opt.step(ts);

  auto path = tmp_path("ckpt_rt.bin");
  save_checkpoint(path, ts, &opt);

  auto [a2, b2] = sample_tensors(99);  // different values, same names
  Adam opt2({0.01});
  Tensor* ts2[] = {&a2, &b2};
  load_checkpoint(path, ts2, &opt2);
  CHECK(a2.data == a.data);
  CHECK(b2.data == b.data);
  CHECK(a2.shape == a.shape);
  CHECK(opt2.t == opt.t);
  REQUIRE(opt2.moments.count("layer.w") == 1);
  CHECK(opt2.moments.at("layer.w") == opt.moments.at("layer.w"));
  CHECK(opt2.moments.at("layer.b") == opt.moments.at("layer.b"));
}

TEST_CASE("file shapes win over constructed shapes") {
  auto [a, b] = sample_tensors(2);
  Tensor* ts[] = {&a, &b};
  auto path = tmp_path("ckpt_shapes.bin");
  save_checkpoint(path, ts);

  Tensor a2("layer.w", {1, 1});  // wrong shape on purpose
  Tensor b2("layer.b", {2});
  Tensor* ts2[] = {&a2, &b2};
  load_checkpoint(path, ts2);
  CHECK(a2.shape == std::vector<std::size_t>{3, 4});
  CHECK(a2.data == a.data);
  CHECK(a2.grad.size() == a2.size());
}

TEST_CASE("corruption and mismatch errors") {
  auto [a, b] = sample_tensors(3);
  Tensor* ts[] = {&a, &b};
  auto path = tmp_path("ckpt_err.bin");
  save_checkpoint(path, ts, nullptr);

  SUBCASE("flipped payload byte fails the checksum") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-3, std::ios::end);
    f.put('\x7f');
    f.close();
    CHECK_THROWS_WITH_AS(load_checkpoint(path, ts), doctest::Contains("checksum"),
                         CheckpointError);
  }

  SUBCASE("truncated file") {
    auto all = [&] {
      std::ifstream in(path, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    }();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(all.data(), static_cast<long>(all.size() / 2));
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path, ts), CheckpointError);
  }

  SUBCASE("not a checkpoint at all") {
    std::ofstream out(path, std::ios::trunc);
    out << "just some text that is long enough to read a header from\n";
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path, ts), CheckpointError);
  }

  SUBCASE("tensor name mismatch") {
    Tensor c("layer.other", {2});
    Tensor* ts2[] = {&a, &c};
    // file's layer.b has nowhere to go, and layer.other is never filled
    CHECK_THROWS_WITH_AS(load_checkpoint(path, ts2),
                         doctest::Contains("layer.b"), CheckpointError);
  }

  SUBCASE("nonexistent path") {
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.bin", ts), CheckpointError);
  }
}
