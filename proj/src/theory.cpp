#include "dekg/theory.hpp"

#include <cmath>
#include <numbers>

#include "dekg/error.hpp"
#include "dekg/training.hpp"

namespace dekg {

std::size_t WorldSpec::num_tuples() const {
  return static_cast<std::size_t>(num_entities) * static_cast<std::size_t>(num_relations) *
         static_cast<std::size_t>(num_entities) * static_cast<std::size_t>(num_timestamps);
}

std::size_t WorldSpec::index(int v, int r, int u, int t) const {
  return ((static_cast<std::size_t>(v) * static_cast<std::size_t>(num_relations) +
           static_cast<std::size_t>(r)) *
              static_cast<std::size_t>(num_entities) +
          static_cast<std::size_t>(u)) *
             static_cast<std::size_t>(num_timestamps) +
         static_cast<std::size_t>(t);
}

void WorldSpec::validate() const {
  if (num_entities <= 0 || num_relations <= 0 || num_timestamps <= 0) {
    throw Error(ErrorKind::InvalidArgument, "world sizes must be positive");
  }
  if (truth.size() != num_tuples()) {
    throw Error(ErrorKind::InvalidArgument, "truth table must cover every tuple");
  }
}

WorldSpec WorldSpec::from_bits(int nv, int nr, int nt, std::uint64_t bits) {
  WorldSpec w{nv, nr, nt, {}};
  if (nv <= 0 || nr <= 0 || nt <= 0) throw Error(ErrorKind::InvalidArgument, "world sizes must be positive");
  const auto n = w.num_tuples();
  if (n > 64) throw Error(ErrorKind::InvalidArgument, "from_bits supports at most 64 tuples");
  w.truth.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.truth[i] = static_cast<std::uint8_t>((bits >> i) & 1u);
  return w;
}

WorldSpec WorldSpec::random(int nv, int nr, int nt, Rng& rng) {
  WorldSpec w{nv, nr, nt, {}};
  if (nv <= 0 || nr <= 0 || nt <= 0) throw Error(ErrorKind::InvalidArgument, "world sizes must be positive");
  w.truth.resize(w.num_tuples());
  for (auto& b : w.truth) b = static_cast<std::uint8_t>(rng.below(2));
  return w;
}

namespace {

double sine_entry(int k, int q, int n) {
  // k, q are 1-based
  return std::sin(static_cast<double>(k) * std::numbers::pi * static_cast<double>(q) /
                  static_cast<double>(n + 1));
}

/// Solves m x = rhs in place by Gaussian elimination with partial pivoting.
Vec solve(std::vector<Vec> m, Vec rhs) {
  const auto n = rhs.size();
  double scale = 0.0;
  for (const auto& row : m) {
    for (double x : row) scale = std::max(scale, std::abs(x));
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i) {
      if (std::abs(m[i][col]) > std::abs(m[piv][col])) piv = i;
    }
    if (std::abs(m[piv][col]) <= 1e-10 * std::max(scale, 1.0)) {
      throw Error(ErrorKind::Construction, "sine-coefficient system is singular; increase the block length");
    }
    std::swap(m[piv], m[col]);
    std::swap(rhs[piv], rhs[col]);
    for (std::size_t i = col + 1; i < n; ++i) {
      const double f = m[i][col] / m[col][col];
      for (std::size_t j = col; j < n; ++j) m[i][j] -= f * m[col][j];
      rhs[i] -= f * rhs[col];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= m[i][j] * x[j];
    x[i] = s / m[i][i];
  }
  return x;
}

}  // namespace

std::vector<Vec> sine_indicator_coefficients(int num_timestamps, int block_length) {
  if (num_timestamps <= 0 || block_length <= 0) {
    throw Error(ErrorKind::InvalidArgument, "timestamp count and block length must be positive");
  }
  const auto n = static_cast<std::size_t>(num_timestamps);
  const auto l = static_cast<std::size_t>(block_length);
  // Gram matrix S S^T of the N x L sine design matrix.
  std::vector<Vec> gram(n, Vec(n, 0.0));
  for (std::size_t q1 = 0; q1 < n; ++q1) {
    for (std::size_t q2 = 0; q2 < n; ++q2) {
      double s = 0.0;
      for (std::size_t k = 0; k < l; ++k) {
        s += sine_entry(static_cast<int>(k + 1), static_cast<int>(q1 + 1), num_timestamps) *
             sine_entry(static_cast<int>(k + 1), static_cast<int>(q2 + 1), num_timestamps);
      }
      gram[q1][q2] = s;
    }
  }
  std::vector<Vec> out;
  for (std::size_t p = 0; p < n; ++p) {
    Vec e(n, 0.0);
    e[p] = 1.0;
    const Vec x = solve(gram, e);
    Vec a(l, 0.0);
    for (std::size_t k = 0; k < l; ++k) {
      for (std::size_t q = 0; q < n; ++q) {
        a[k] += sine_entry(static_cast<int>(k + 1), static_cast<int>(q + 1), num_timestamps) * x[q];
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

double sine_indicator_value(std::span<const double> coeffs, int num_timestamps, int q) {
  double s = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    s += coeffs[k] * sine_entry(static_cast<int>(k + 1), q, num_timestamps);
  }
  return s;
}

Date theory_date(int t) { return Date{0, 0, t + 1}; }

ExpressivityAssignment construct_expressive_params(const WorldSpec& world, int block_length) {
  world.validate();
  if (block_length <= 0) throw Error(ErrorKind::InvalidArgument, "block length must be positive");
  const auto nv = static_cast<std::size_t>(world.num_entities);
  const auto nr = static_cast<std::size_t>(world.num_relations);
  const auto nt = static_cast<std::size_t>(world.num_timestamps);
  const auto l = static_cast<std::size_t>(block_length);
  const std::size_t half = nr * nv * nt * l;
  if (2 * half > kMaxTheoryDim) {
    throw Error(ErrorKind::InvalidArgument, "construction dimension " + std::to_string(2 * half) +
                                                " exceeds the limit of " + std::to_string(kMaxTheoryDim));
  }

  ExpressivityAssignment out;
  out.block_length = block_length;
  out.dim = static_cast<int>(2 * half);
  out.sine_coefficients = sine_indicator_coefficients(world.num_timestamps, block_length);

  ModelConfig cfg;
  cfg.kind = ModelKind::DESimplE;
  cfg.dim = out.dim;
  cfg.temporal_dim = out.dim;
  cfg.activation = Activation{ActivationKind::Sine};
  out.params = ModelParams(cfg, nv, nr, nt);

  const auto layout = out.params.entity_layout();
  const auto freq_day = static_cast<std::size_t>(layout.frequency_offset(2));
  const auto phase_year = static_cast<std::size_t>(layout.phase_offset(0));
  auto slot = [&](std::size_t h, std::size_t r, std::size_t x, std::size_t p) {
    return h * half + ((r * nv + x) * nt + p) * l;
  };

  auto& fwd = out.params.entity_table(0);
  auto& bwd = out.params.entity_table(1);
  for (std::size_t x = 0; x < nv; ++x) {
    auto row = fwd.row(x);
    for (std::size_t h = 0; h < 2; ++h) {
      for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t p = 0; p < nt; ++p) {
          const auto base = slot(h, r, x, p);
          for (std::size_t k = 0; k < l; ++k) {
            row[base + k] = out.sine_coefficients[p][k];
            row[freq_day + base + k] =
                static_cast<double>(k + 1) * std::numbers::pi / static_cast<double>(nt + 1);
          }
        }
      }
    }
    // Static tail rows: sin(pi/2) + sin(0) + sin(0) = 1 at every time.
    auto brow = bwd.row(x);
    for (std::size_t n = 0; n < 2 * half; ++n) brow[phase_year + n] = std::numbers::pi / 2.0;
  }

  for (std::size_t v = 0; v < nv; ++v) {
    for (std::size_t r = 0; r < nr; ++r) {
      for (std::size_t u = 0; u < nv; ++u) {
        for (std::size_t p = 0; p < nt; ++p) {
          const double sign = world.holds(static_cast<int>(v), static_cast<int>(r),
                                          static_cast<int>(u), static_cast<int>(p))
                                  ? 1.0
                                  : -1.0;
          auto tail_u = bwd.row(u);
          auto tail_v = bwd.row(v);
          for (std::size_t k = 0; k < l; ++k) {
            tail_u[slot(0, r, v, p) + k] = sign;
            tail_v[slot(1, r, u, p) + k] = sign;
          }
        }
      }
    }
  }

  for (std::size_t r = 0; r < nr; ++r) {
    auto rf = out.params.relation_table(0).row(r);
    auto ri = out.params.relation_table(1).row(r);
    for (std::size_t n = 0; n < nv * nt * l; ++n) {
      rf[r * nv * nt * l + n] = 1.0;
      ri[half + r * nv * nt * l + n] = 1.0;
    }
  }
  return out;
}

double forward_component_score(const ExpressivityAssignment& a, int v, int r, int u, int t) {
  ScoreEngine engine(a.params);
  const auto d = static_cast<std::size_t>(a.dim);
  const auto tf = engine.features(theory_date(t));
  Vec hv(engine.entity_size()), tu(engine.entity_size()), rel(engine.relation_size());
  engine.entity_embedding(v, tf, hv);
  engine.entity_embedding(u, tf, tu);
  engine.relation_embedding(r, tf, rel);
  double s = 0.0;
  for (std::size_t n = 0; n < d / 2; ++n) s += hv[n] * rel[n] * tu[d + n];
  return s;
}

ExpressivityReport verify_expressivity(const WorldSpec& world, int block_length) {
  const auto a = construct_expressive_params(world, block_length);
  ExpressivityReport rep;
  for (int p = 0; p < world.num_timestamps; ++p) {
    for (int q = 0; q < world.num_timestamps; ++q) {
      const double want = p == q ? 1.0 : 0.0;
      const double got = sine_indicator_value(a.sine_coefficients[static_cast<std::size_t>(p)],
                                              world.num_timestamps, q + 1);
      rep.max_indicator_error = std::max(rep.max_indicator_error, std::abs(got - want));
    }
  }
  for (int v = 0; v < world.num_entities; ++v) {
    for (int r = 0; r < world.num_relations; ++r) {
      for (int u = 0; u < world.num_entities; ++u) {
        for (int t = 0; t < world.num_timestamps; ++t) {
          const bool truth = world.holds(v, r, u, t);
          ++rep.tuples;
          const double c = forward_component_score(a, v, r, u, t);
          if ((c > 0.0) != truth || c == 0.0) ++rep.component_mismatches;
          Quadruple q{v, r, u, theory_date(t), t};
          const double s = score(a.params, q);
          if ((s > 0.0) != truth || s == 0.0) ++rep.score_mismatches;
        }
      }
    }
  }
  return rep;
}

TyingScheme TyingScheme::symmetric(RelationId r) { return {TyingKind::Symmetric, r, r, {}, {}}; }

TyingScheme TyingScheme::anti_symmetric(RelationId r) {
  return {TyingKind::AntiSymmetric, r, r, {}, {}};
}

TyingScheme TyingScheme::inverse(RelationId r_i, RelationId r_j) {
  return {TyingKind::Inverse, r_i, r_j, {}, {}};
}

TyingScheme TyingScheme::entails(RelationId r_i, RelationId r_j, Vec delta_fwd, Vec delta_bwd) {
  return {TyingKind::Entails, r_i, r_j, std::move(delta_fwd), std::move(delta_bwd)};
}

const char* tying_kind_name(TyingKind kind) {
  switch (kind) {
    case TyingKind::Symmetric: return "symmetric";
    case TyingKind::AntiSymmetric: return "anti-symmetric";
    case TyingKind::Inverse: return "inverse";
    case TyingKind::Entails: return "entails";
  }
  return "?";
}

namespace {

void check_relation(const ModelParams& p, RelationId r) {
  if (r < 0 || static_cast<std::size_t>(r) >= p.num_relations()) {
    throw Error(ErrorKind::Index, "relation id " + std::to_string(r) + " out of range");
  }
}

/// Negates the rows' output: amplitude entries only for diachronic rows.
void negate_output(std::span<double> row, const DiachronicLayout& layout) {
  for (int n = 0; n < layout.dim; ++n) row[static_cast<std::size_t>(n)] = -row[static_cast<std::size_t>(n)];
  if (layout.amplitude_per_component && layout.temporal_dim > 0) {
    for (int c = 1; c < kDateComponents; ++c) {
      const auto off = static_cast<std::size_t>(layout.amplitude_offset(c));
      for (int n = 0; n < layout.temporal_dim; ++n) {
        row[off + static_cast<std::size_t>(n)] = -row[off + static_cast<std::size_t>(n)];
      }
    }
  }
}

void copy_row(std::span<double> dst, std::span<const double> src) {
  std::copy(src.begin(), src.end(), dst.begin());
}

bool entity_amplitudes_nonnegative(const ModelParams& p) {
  const auto layout = p.entity_layout();
  for (int role = 0; role < entity_roles(p.config().kind); ++role) {
    const auto& table = p.entity_table(role);
    for (std::size_t e = 0; e < table.rows; ++e) {
      const auto row = table.row(e);
      for (int n = 0; n < layout.dim; ++n) {
        if (row[static_cast<std::size_t>(n)] < 0.0) return false;
      }
      if (layout.amplitude_per_component && layout.temporal_dim > 0) {
        for (int c = 1; c < kDateComponents; ++c) {
          const auto off = static_cast<std::size_t>(layout.amplitude_offset(c));
          for (int n = 0; n < layout.temporal_dim; ++n) {
            if (row[off + static_cast<std::size_t>(n)] < 0.0) return false;
          }
        }
      }
    }
  }
  return true;
}

}  // namespace

ModelParams apply_tying(const ModelParams& params, const TyingScheme& scheme) {
  const auto kind = params.config().kind;
  if (kind != ModelKind::SimplE && kind != ModelKind::DESimplE) {
    throw Error(ErrorKind::InvalidArgument, "tying requires SimplE or DE-SimplE parameters");
  }
  check_relation(params, scheme.r_i);
  check_relation(params, scheme.r_j);
  ModelParams out = params;
  auto& fwd = out.relation_table(0);
  auto& bwd = out.relation_table(1);
  const auto ri = static_cast<std::size_t>(scheme.r_i);
  const auto rj = static_cast<std::size_t>(scheme.r_j);
  const auto layout = out.relation_layout();

  switch (scheme.kind) {
    case TyingKind::Symmetric:
      copy_row(bwd.row(ri), fwd.row(ri));
      break;
    case TyingKind::AntiSymmetric:
      copy_row(bwd.row(ri), fwd.row(ri));
      negate_output(bwd.row(ri), layout);
      break;
    case TyingKind::Inverse: {
      if (ri == rj) throw Error(ErrorKind::InvalidArgument, "inverse tying needs two relations");
      copy_row(fwd.row(rj), params.relation_table(1).row(ri));
      copy_row(bwd.row(rj), params.relation_table(0).row(ri));
      break;
    }
    case TyingKind::Entails: {
      if (ri == rj) throw Error(ErrorKind::InvalidArgument, "entailment needs two relations");
      const auto d = static_cast<std::size_t>(out.config().dim);
      if (scheme.delta_fwd.size() != d || scheme.delta_bwd.size() != d) {
        throw Error(ErrorKind::Dimension, "entailment deltas must have length " + std::to_string(d));
      }
      if (layout.temporal_dim > 0) {
        throw Error(ErrorKind::Constraint, "entailment tying requires static relation embeddings");
      }
      for (const auto* delta : {&scheme.delta_fwd, &scheme.delta_bwd}) {
        for (double x : *delta) {
          if (!(x >= 0.0)) throw Error(ErrorKind::Constraint, "entailment delta has a negative element");
        }
      }
      if (!entity_amplitudes_nonnegative(params)) {
        throw Error(ErrorKind::Constraint, "entailment requires non-negative entity amplitudes");
      }
      if (is_diachronic(kind) && params.entity_layout().temporal_dim > 0 &&
          !has_nonnegative_range(params.config().activation)) {
        throw Error(ErrorKind::Constraint, "entailment requires an activation with non-negative range");
      }
      auto f = fwd.row(rj);
      auto b = bwd.row(rj);
      const auto fi = params.relation_table(0).row(ri);
      const auto bi = params.relation_table(1).row(ri);
      for (std::size_t n = 0; n < d; ++n) {
        f[n] = fi[n] + scheme.delta_fwd[n];
        b[n] = bi[n] + scheme.delta_bwd[n];
      }
      break;
    }
  }
  return out;
}

ModelParams random_tying_params(ModelKind kind, int num_entities, int num_relations, int dim,
                                int temporal_dim, Activation activation, bool nonnegative, Rng& rng) {
  if (kind != ModelKind::SimplE && kind != ModelKind::DESimplE) {
    throw Error(ErrorKind::InvalidArgument, "tying requires SimplE or DE-SimplE parameters");
  }
  if (num_entities <= 0 || num_relations <= 0) {
    throw Error(ErrorKind::InvalidArgument, "entity and relation counts must be positive");
  }
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.dim = dim;
  cfg.temporal_dim = kind == ModelKind::DESimplE ? temporal_dim : 0;
  cfg.activation = activation;
  ModelParams p(cfg, static_cast<std::size_t>(num_entities), static_cast<std::size_t>(num_relations), 0);
  for (auto& t : p.tables()) fill_uniform(rng, t.data, 1.0);
  if (nonnegative) enforce_nonnegativity(p);
  return p;
}

TyingReport check_tying(const ModelParams& tied, const TyingScheme& scheme, std::size_t samples,
                        Rng& rng) {
  const auto ne = tied.num_entities();
  if (ne == 0) throw Error(ErrorKind::InvalidArgument, "no entities to sample");
  TyingReport rep;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto v = static_cast<EntityId>(rng.below(ne));
    const auto u = static_cast<EntityId>(rng.below(ne));
    const Date date{1990 + static_cast<int>(rng.below(30)), 1 + static_cast<int>(rng.below(12)),
                    1 + static_cast<int>(rng.below(28))};
    auto phi = [&](EntityId h, RelationId r, EntityId t) {
      return score(tied, Quadruple{h, r, t, date, 0});
    };
    bool ok = true;
    switch (scheme.kind) {
      case TyingKind::Symmetric: ok = phi(v, scheme.r_i, u) == phi(u, scheme.r_i, v); break;
      case TyingKind::AntiSymmetric: ok = phi(v, scheme.r_i, u) == -phi(u, scheme.r_i, v); break;
      case TyingKind::Inverse: ok = phi(v, scheme.r_i, u) == phi(u, scheme.r_j, v); break;
      case TyingKind::Entails: ok = phi(v, scheme.r_j, u) >= phi(v, scheme.r_i, u); break;
    }
    ++rep.checked;
    if (!ok) ++rep.violations;
  }
  return rep;
}

}  // namespace dekg
