#pragma once

#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrlm {

// Named trainable tensor: row-major values plus a gradient slot of the same
// shape. 64-bit floats throughout.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(std::string n, std::vector<std::size_t> s)
      : name(std::move(n)), shape(std::move(s)) {
    data.assign(size(), 0.0);
    grad.assign(size(), 0.0);
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  void zero_grad() { grad.assign(grad.size(), 0.0); }

  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  void init_uniform(std::mt19937_64& rng, std::size_t fan_in) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : data) v = dist(rng);
  }

  void fill(double v) { data.assign(data.size(), v); }
};

inline void check_shape_match(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape)
    throw std::invalid_argument("tensor shape mismatch: " + a.name + " vs " +
                                b.name);
}

}  // namespace lrlm
