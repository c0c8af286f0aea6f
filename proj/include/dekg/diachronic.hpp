#pragma once

#include <array>
#include <span>

#include "dekg/core_math.hpp"
#include "dekg/data.hpp"

namespace dekg {

/// Year, month and day as real inputs to the temporal features.
using TimeFeatures = std::array<double, 3>;

inline constexpr int kDateComponents = 3;

/// Components frozen at a constant and excluded from updates.
enum class Ablation : unsigned {
  None = 0,
  FixAmplitude = 1,  // a[n] = 1 on temporal slots
  FixFrequency = 2,  // w_c[n] = 1
  FixPhase = 4,      // b_c[n] = 0
};

constexpr Ablation operator|(Ablation a, Ablation b) {
  return static_cast<Ablation>(static_cast<unsigned>(a) | static_cast<unsigned>(b));
}
constexpr bool has_flag(Ablation set, Ablation flag) {
  return (static_cast<unsigned>(set) & static_cast<unsigned>(flag)) != 0;
}

/// Packing of one diachronic parameter row:
///   [ a (dim) | w_year w_month w_day (temporal_dim each) |
///     b_year b_month b_day (temporal_dim each) | a_month a_day (per-component only) ]
/// A row with temporal_dim == 0 is a plain static vector.
struct DiachronicLayout {
  int dim = 0;
  int temporal_dim = 0;
  bool amplitude_per_component = false;

  int width() const {
    return dim + 6 * temporal_dim + (amplitude_per_component ? 2 * temporal_dim : 0);
  }
  int frequency_offset(int component) const { return dim + component * temporal_dim; }
  int phase_offset(int component) const { return dim + (3 + component) * temporal_dim; }
  /// Offset of component c's amplitudes; the year amplitude shares the a block.
  int amplitude_offset(int component) const {
    if (!amplitude_per_component || component == 0) return 0;
    return dim + (5 + component) * temporal_dim;
  }
};

struct DiachronicView {
  DiachronicLayout layout;
  Activation activation;
  Ablation ablation = Ablation::None;
  std::span<const double> row;
};

/// Owning parameter set for one embedding role of one entity.
struct DiachronicParams {
  DiachronicLayout layout;
  Activation activation;
  Ablation ablation = Ablation::None;
  Vec row;

  DiachronicParams() = default;
  DiachronicParams(DiachronicLayout layout, Activation activation);

  std::span<double> amplitude() { return slice(0, layout.dim); }
  std::span<double> frequency(int c) { return slice(layout.frequency_offset(c), layout.temporal_dim); }
  std::span<double> phase(int c) { return slice(layout.phase_offset(c), layout.temporal_dim); }
  std::span<double> component_amplitude(int c) {
    return slice(layout.amplitude_offset(c), layout.temporal_dim);
  }

  DiachronicView view() const { return {layout, activation, ablation, row}; }

 private:
  std::span<double> slice(int offset, int count) {
    return std::span<double>(row).subspan(static_cast<std::size_t>(offset),
                                          static_cast<std::size_t>(count));
  }
};

/// Embedding value at time t, written to `out` (length dim).
void deemb(const DiachronicView& p, const TimeFeatures& t, std::span<double> out);
Vec deemb(const DiachronicParams& p, const Date& date);

/// Accumulates d<upstream, z(t)>/d(row) into `grad_row` (length layout.width()).
void deemb_backward(const DiachronicView& p, const TimeFeatures& t,
                    std::span<const double> upstream, std::span<double> grad_row);

/// Gradient of <upstream, deemb(p, date)> w.r.t. every parameter, returned in
/// the same shape as `p`.
DiachronicParams deemb_grad(const DiachronicParams& p, const Date& date,
                            std::span<const double> upstream);

/// Writes the frozen constants into a parameter row.
void write_ablation_constants(const DiachronicLayout& layout, Ablation mode, std::span<double> row);

DiachronicParams ablate(DiachronicParams p, Ablation mode);

/// floor(gamma * dim).
int temporal_dim_from_gamma(double gamma, int dim);

}  // namespace dekg
