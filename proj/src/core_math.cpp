#include "dekg/core_math.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dekg/error.hpp"

namespace dekg {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Dimension: return "dimension error";
    case ErrorKind::Index: return "index error";
    case ErrorKind::Numeric: return "numeric error";
    case ErrorKind::Constraint: return "constraint violation";
    case ErrorKind::DegenerateSplit: return "degenerate split";
    case ErrorKind::Checkpoint: return "checkpoint error";
    case ErrorKind::Verification: return "verification failure";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Construction: return "construction error";
  }
  return "unknown error";
}

double dot3(std::span<const double> a, std::span<const double> b,
            std::span<const double> c) {
  if (a.size() != b.size() || a.size() != c.size()) {
    throw Error(ErrorKind::Dimension,
                "dot3: length mismatch (" + std::to_string(a.size()) + ", " +
                    std::to_string(b.size()) + ", " + std::to_string(c.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) sum += a[n] * b[n] * c[n];
  return sum;
}

double l2_norm(std::span<const double> a) {
  double sum = 0.0;
  for (double x : a) sum += x * x;
  return std::sqrt(sum);
}

Activation Activation::leaky_relu(double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "leaky relu slope must lie in (0, 1)");
  }
  return {ActivationKind::LeakyReLU, slope};
}

double apply_activation(const Activation& act, double x) {
  switch (act.kind) {
    case ActivationKind::Sine: return std::sin(x);
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::LeakyReLU: return x >= 0.0 ? x : act.slope * x;
    case ActivationKind::SquaredExponential: return std::exp(-x * x);
  }
  return 0.0;
}

double activation_derivative(const Activation& act, double x) {
  switch (act.kind) {
    case ActivationKind::Sine: return std::cos(x);
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case ActivationKind::LeakyReLU: return x >= 0.0 ? 1.0 : act.slope;
    case ActivationKind::SquaredExponential: return -2.0 * x * std::exp(-x * x);
  }
  return 0.0;
}

bool has_nonnegative_range(const Activation& act) {
  return act.kind == ActivationKind::Sigmoid ||
         act.kind == ActivationKind::SquaredExponential;
}

std::string_view activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Sine: return "sine";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::LeakyReLU: return "leaky-relu";
    case ActivationKind::SquaredExponential: return "squared-exponential";
  }
  return "unknown";
}

std::optional<ActivationKind> parse_activation(std::string_view name) {
  for (auto kind : {ActivationKind::Sine, ActivationKind::Tanh, ActivationKind::Sigmoid,
                    ActivationKind::LeakyReLU, ActivationKind::SquaredExponential}) {
    if (name == activation_name(kind)) return kind;
  }
  return std::nullopt;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "Rng::below(0)");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return x % n;
}

void fill_uniform(Rng& rng, std::span<double> out, double range) {
  if (range < 0.0) throw Error(ErrorKind::InvalidArgument, "init range must be >= 0");
  for (double& x : out) x = rng.uniform(-range, range);
}

Vec init_uniform(Rng& rng, std::size_t d, double range) {
  Vec v(d);
  fill_uniform(rng, v, range);
  return v;
}

Vec finite_diff_grad(const ScalarFn& f, std::span<const double> theta, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "finite_diff_grad: eps must be > 0");
  Vec x(theta.begin(), theta.end());
  Vec grad(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double saved = x[n];
    x[n] = saved + eps;
    const double plus = f(x);
    x[n] = saved - eps;
    const double minus = f(x);
    x[n] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw Error(ErrorKind::Numeric,
                  "finite_diff_grad: non-finite function value at coordinate " +
                      std::to_string(n));
    }
    grad[n] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

}  // namespace dekg
