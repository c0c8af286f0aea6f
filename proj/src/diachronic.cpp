#include "dekg/diachronic.hpp"

#include <cmath>

#include "dekg/error.hpp"

namespace dekg {

namespace {

struct Frozen {
  bool amplitude, frequency, phase;
  explicit Frozen(Ablation a)
      : amplitude(has_flag(a, Ablation::FixAmplitude)),
        frequency(has_flag(a, Ablation::FixFrequency)),
        phase(has_flag(a, Ablation::FixPhase)) {}
};

void check_row(const DiachronicLayout& layout, std::size_t size) {
  if (layout.temporal_dim < 0 || layout.temporal_dim > layout.dim) {
    throw Error(ErrorKind::Dimension, "temporal_dim must lie in [0, dim]");
  }
  if (size != static_cast<std::size_t>(layout.width())) {
    throw Error(ErrorKind::Dimension, "diachronic row has wrong width");
  }
}

}  // namespace

DiachronicParams::DiachronicParams(DiachronicLayout l, Activation act)
    : layout(l), activation(act), row(static_cast<std::size_t>(l.width()), 0.0) {}

void deemb(const DiachronicView& p, const TimeFeatures& t, std::span<double> out) {
  const auto& L = p.layout;
  const Frozen frozen(p.ablation);
  const auto dt = static_cast<std::size_t>(L.temporal_dim);
  const auto d = static_cast<std::size_t>(L.dim);
  const double* row = p.row.data();
  for (std::size_t n = 0; n < dt; ++n) {
    double z = 0.0;
    for (int c = 0; c < kDateComponents; ++c) {
      const double w = frozen.frequency ? 1.0 : row[L.frequency_offset(c) + n];
      const double b = frozen.phase ? 0.0 : row[L.phase_offset(c) + n];
      const double s = apply_activation(p.activation, w * t[c] + b);
      if (L.amplitude_per_component) {
        z += (frozen.amplitude ? 1.0 : row[L.amplitude_offset(c) + n]) * s;
      } else {
        z += s;
      }
    }
    if (!L.amplitude_per_component && !frozen.amplitude) z *= row[n];
    out[n] = z;
  }
  for (std::size_t n = dt; n < d; ++n) out[n] = row[n];
}

Vec deemb(const DiachronicParams& p, const Date& date) {
  check_row(p.layout, p.row.size());
  Vec out(static_cast<std::size_t>(p.layout.dim));
  deemb(p.view(), date_ordinal(date), out);
  return out;
}

void deemb_backward(const DiachronicView& p, const TimeFeatures& t,
                    std::span<const double> upstream, std::span<double> grad_row) {
  const auto& L = p.layout;
  const Frozen frozen(p.ablation);
  const auto dt = static_cast<std::size_t>(L.temporal_dim);
  const auto d = static_cast<std::size_t>(L.dim);
  const double* row = p.row.data();
  double* g = grad_row.data();
  for (std::size_t n = 0; n < dt; ++n) {
    const double up = upstream[n];
    if (up == 0.0) continue;
    double sum = 0.0;
    for (int c = 0; c < kDateComponents; ++c) {
      const double w = frozen.frequency ? 1.0 : row[L.frequency_offset(c) + n];
      const double b = frozen.phase ? 0.0 : row[L.phase_offset(c) + n];
      const double x = w * t[c] + b;
      const double s = apply_activation(p.activation, x);
      const double ds = activation_derivative(p.activation, x);
      double amp = 1.0;
      if (!frozen.amplitude) {
        amp = L.amplitude_per_component ? row[L.amplitude_offset(c) + n] : row[n];
      }
      if (L.amplitude_per_component) {
        if (!frozen.amplitude) g[L.amplitude_offset(c) + n] += up * s;
      } else {
        sum += s;
      }
      if (!frozen.frequency) g[L.frequency_offset(c) + n] += up * amp * ds * t[c];
      if (!frozen.phase) g[L.phase_offset(c) + n] += up * amp * ds;
    }
    if (!L.amplitude_per_component && !frozen.amplitude) g[n] += up * sum;
  }
  for (std::size_t n = dt; n < d; ++n) g[n] += upstream[n];
}

DiachronicParams deemb_grad(const DiachronicParams& p, const Date& date,
                            std::span<const double> upstream) {
  check_row(p.layout, p.row.size());
  if (upstream.size() != static_cast<std::size_t>(p.layout.dim)) {
    throw Error(ErrorKind::Dimension, "deemb_grad: upstream length must equal dim");
  }
  DiachronicParams grad(p.layout, p.activation);
  grad.ablation = p.ablation;
  deemb_backward(p.view(), date_ordinal(date), upstream, grad.row);
  return grad;
}

void write_ablation_constants(const DiachronicLayout& L, Ablation mode, std::span<double> row) {
  const auto dt = static_cast<std::size_t>(L.temporal_dim);
  for (int c = 0; c < kDateComponents; ++c) {
    for (std::size_t n = 0; n < dt; ++n) {
      if (has_flag(mode, Ablation::FixAmplitude)) row[L.amplitude_offset(c) + n] = 1.0;
      if (has_flag(mode, Ablation::FixFrequency)) row[L.frequency_offset(c) + n] = 1.0;
      if (has_flag(mode, Ablation::FixPhase)) row[L.phase_offset(c) + n] = 0.0;
    }
  }
}

DiachronicParams ablate(DiachronicParams p, Ablation mode) {
  check_row(p.layout, p.row.size());
  p.ablation = p.ablation | mode;
  write_ablation_constants(p.layout, mode, p.row);
  return p;
}

int temporal_dim_from_gamma(double gamma, int dim) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "gamma must lie in [0, 1]");
  }
  // Nudge before flooring so 0.16 * 100 is 16, not 15.
  return static_cast<int>(std::floor(gamma * dim + 1e-9));
}

}  // namespace dekg
