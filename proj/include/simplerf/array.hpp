#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace simplerf::ad {

// Dense row-major float64 matrix. Vectors are [n,1] and scalars [1,1].
struct Shape {
  int64_t rows = 0;
  int64_t cols = 0;
  int64_t size() const { return rows * cols; }
  bool operator==(const Shape& o) const { return rows == o.rows && cols == o.cols; }
  bool operator!=(const Shape& o) const { return !(*this == o); }
  std::string str() const { return "[" + std::to_string(rows) + "," + std::to_string(cols) + "]"; }
};

struct Array {
  Shape shape;
  std::vector<double> data;

  Array() = default;
  Array(int64_t r, int64_t c) : shape{r, c}, data(static_cast<size_t>(r * c), 0.0) {}
  Array(Shape s, std::vector<double> d) : shape(s), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != shape.size())
      throw std::invalid_argument("array data does not match shape " + shape.str());
  }

  static Array zeros(int64_t r, int64_t c) { return Array(r, c); }
  static Array full(int64_t r, int64_t c, double v) {
    Array a(r, c);
    std::fill(a.data.begin(), a.data.end(), v);
    return a;
  }
  static Array scalar(double v) { return full(1, 1, v); }
  static Array from(std::initializer_list<double> vals) {
    Array a(static_cast<int64_t>(vals.size()), 1);
    std::copy(vals.begin(), vals.end(), a.data.begin());
    return a;
  }

  int64_t rows() const { return shape.rows; }
  int64_t cols() const { return shape.cols; }
  int64_t size() const { return shape.size(); }
  double& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape.cols + c)]; }
  double at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * shape.cols + c)]; }
  double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }
};

// Deterministic RNG used across the project. One generator per concern,
// seeded explicitly; never seeded from the clock.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(gen_);
  }
  int64_t index(int64_t n) { return std::uniform_int_distribution<int64_t>(0, n - 1)(gen_); }
  uint64_t raw() { return gen_(); }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline Array random_uniform(Rng& rng, int64_t r, int64_t c, double lo, double hi) {
  Array a(r, c);
  for (auto& v : a.data) v = rng.uniform(lo, hi);
  return a;
}

inline Array random_normal(Rng& rng, int64_t r, int64_t c, double mean, double stddev) {
  Array a(r, c);
  for (auto& v : a.data) v = rng.normal(mean, stddev);
  return a;
}

}  // namespace simplerf::ad
