#pragma once

#include <cstdint>
#include <vector>

#include "dekg/core_math.hpp"
#include "dekg/models.hpp"

namespace dekg {

/// Complete truth assignment over V x R x V x T. Timestamps are 0-based
/// here; the construction evaluates them at integer times 1..|T|.
struct WorldSpec {
  int num_entities = 0;
  int num_relations = 0;
  int num_timestamps = 0;
  std::vector<std::uint8_t> truth;

  std::size_t num_tuples() const;
  std::size_t index(int v, int r, int u, int t) const;
  bool holds(int v, int r, int u, int t) const { return truth[index(v, r, u, t)] != 0; }
  void validate() const;

  /// Bit i of `bits` is the truth value of tuple index i (at most 64 tuples).
  static WorldSpec from_bits(int nv, int nr, int nt, std::uint64_t bits);
  static WorldSpec random(int nv, int nr, int nt, Rng& rng);
};

/// Upper bound on the constructed embedding dimension.
inline constexpr std::size_t kMaxTheoryDim = 1u << 16;

/// Amplitudes a_1..a_L with sum_k a_k sin(k pi q / (N + 1)) = [q == p] for
/// q = 1..N; one row per p. Minimum-norm solution; needs L >= N.
std::vector<Vec> sine_indicator_coefficients(int num_timestamps, int block_length);
double sine_indicator_value(std::span<const double> coeffs, int num_timestamps, int q);

struct ExpressivityAssignment {
  int block_length = 0;
  int dim = 0;
  std::vector<Vec> sine_coefficients;
  ModelParams params;  // DE-SimplE, sine activation, all head-role dimensions temporal
};

/// Builds DE-SimplE parameters whose score is +1 on every true tuple and
/// -1 on every false one. The first half of each vector carries the
/// <head_fwd, r_fwd, tail_bwd> term; the second half mirrors it for the
/// inverse term.
ExpressivityAssignment construct_expressive_params(const WorldSpec& world, int block_length);

Date theory_date(int t);  // 0-based timestamp -> integer stamp t + 1

/// <head_fwd, r_fwd, tail_bwd> restricted to the first half of the vectors.
double forward_component_score(const ExpressivityAssignment& a, int v, int r, int u, int t);

struct ExpressivityReport {
  std::size_t tuples = 0;
  std::size_t component_mismatches = 0;
  std::size_t score_mismatches = 0;
  double max_indicator_error = 0.0;
  double indicator_tolerance = 1e-6;

  bool passed() const {
    return component_mismatches == 0 && score_mismatches == 0 &&
           max_indicator_error <= indicator_tolerance;
  }
};

ExpressivityReport verify_expressivity(const WorldSpec& world, int block_length);

enum class TyingKind { Symmetric, AntiSymmetric, Inverse, Entails };

struct TyingScheme {
  TyingKind kind = TyingKind::Symmetric;
  RelationId r_i = 0;
  RelationId r_j = 0;
  Vec delta_fwd;
  Vec delta_bwd;

  static TyingScheme symmetric(RelationId r);
  static TyingScheme anti_symmetric(RelationId r);
  static TyingScheme inverse(RelationId r_i, RelationId r_j);
  static TyingScheme entails(RelationId r_i, RelationId r_j, Vec delta_fwd, Vec delta_bwd);
};

const char* tying_kind_name(TyingKind kind);

/// Returns a copy of SimplE / DE-SimplE parameters with the scheme's relation
/// rows substituted. Entails checks its non-negativity preconditions and
/// throws Constraint when any fails.
ModelParams apply_tying(const ModelParams& params, const TyingScheme& scheme);

/// Random SimplE-family parameters for tying checks, uniform in [-1, 1];
/// entity amplitudes clamped to >= 0 when `nonnegative`.
ModelParams random_tying_params(ModelKind kind, int num_entities, int num_relations, int dim,
                                int temporal_dim, Activation activation, bool nonnegative, Rng& rng);

struct TyingReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  bool passed() const { return violations == 0; }
};

/// Samples random (v, u, date) tuples and checks the scheme's identity
/// (exact equality, negation, cross-equality or the entailment inequality).
TyingReport check_tying(const ModelParams& tied, const TyingScheme& scheme, std::size_t samples,
                        Rng& rng);

}  // namespace dekg
