#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace dekg {

using Vec = std::vector<double>;

/// Sum of the element-wise product of three equal-length vectors.
double dot3(std::span<const double> a, std::span<const double> b,
            std::span<const double> c);

double l2_norm(std::span<const double> a);

enum class ActivationKind { Sine, Tanh, Sigmoid, LeakyReLU, SquaredExponential };

struct Activation {
  ActivationKind kind = ActivationKind::Sine;
  double slope = 0.1;  // LeakyReLU only

  static Activation sine() { return {ActivationKind::Sine, 0.1}; }
  static Activation leaky_relu(double slope = 0.1);
};

double apply_activation(const Activation& act, double x);
double activation_derivative(const Activation& act, double x);

/// True when every output of the activation is >= 0.
bool has_nonnegative_range(const Activation& act);

std::string_view activation_name(ActivationKind kind);
std::optional<ActivationKind> parse_activation(std::string_view name);

/// Seeded 64-bit generator. Same seed and same call sequence give the same
/// outputs on every platform (mt19937_64's output sequence is fixed by the
/// standard; the real/int mappings below avoid library distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next() {
    ++position_;
    return engine_();
  }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
};

Vec init_uniform(Rng& rng, std::size_t d, double range);
void fill_uniform(Rng& rng, std::span<double> out, double range);

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central-difference gradient of f at theta.
Vec finite_diff_grad(const ScalarFn& f, std::span<const double> theta, double eps);

}  // namespace dekg
