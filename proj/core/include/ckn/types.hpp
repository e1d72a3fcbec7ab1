#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ckn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

class DegenerateDesignError : public std::runtime_error {
public:
  explicit DegenerateDesignError(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public std::runtime_error {
public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double kkt_gap)
      : std::runtime_error(what), kkt_gap_(kkt_gap) {}
  double kkt_gap() const { return kkt_gap_; }

private:
  double kkt_gap_;
};

// splitmix64, used to derive independent per-(trial, hypothesis) RNG streams
// from a master seed without any dependence on scheduling order.
inline std::uint64_t split_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(mix(a) ^ b) ^ c);
}

}  // namespace ckn
