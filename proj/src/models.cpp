#include "dekg/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dekg/error.hpp"

namespace dekg {

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::TransE: return "TransE";
    case ModelKind::DistMult: return "DistMult";
    case ModelKind::SimplE: return "SimplE";
    case ModelKind::DETransE: return "DE-TransE";
    case ModelKind::DEDistMult: return "DE-DistMult";
    case ModelKind::DESimplE: return "DE-SimplE";
    case ModelKind::TTransE: return "TTransE";
    case ModelKind::HyTE: return "HyTE";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
  for (auto kind : kAllModelKinds) {
    const auto canonical = model_kind_name(kind);
    if (name == canonical) return kind;
    // Accept the hyphen-free spelling too (DEDistMult).
    std::string bare;
    for (char c : canonical) {
      if (c != '-') bare.push_back(c);
    }
    if (name == bare) return kind;
  }
  return std::nullopt;
}

bool is_diachronic(ModelKind kind) {
  return kind == ModelKind::DETransE || kind == ModelKind::DEDistMult ||
         kind == ModelKind::DESimplE;
}

bool uses_time_table(ModelKind kind) {
  return kind == ModelKind::TTransE || kind == ModelKind::HyTE;
}

int entity_roles(ModelKind kind) {
  return kind == ModelKind::SimplE || kind == ModelKind::DESimplE ? 2 : 1;
}

int relation_roles(ModelKind kind) { return entity_roles(kind); }

ModelKind static_counterpart(ModelKind kind) {
  switch (kind) {
    case ModelKind::DETransE: return ModelKind::TransE;
    case ModelKind::DEDistMult: return ModelKind::DistMult;
    case ModelKind::DESimplE: return ModelKind::SimplE;
    default: return kind;
  }
}

bool supports_dropout(ModelKind kind) {
  const auto base = static_counterpart(kind);
  return base == ModelKind::DistMult || base == ModelKind::SimplE;
}

void ModelConfig::validate() const {
  if (dim <= 0) throw Error(ErrorKind::Config, "dim must be positive");
  if (is_diachronic(kind) && (temporal_dim < 0 || temporal_dim > dim)) {
    throw Error(ErrorKind::Config, "temporal_dim must lie in [0, dim]");
  }
  if (diachronic_relations && !is_diachronic(kind)) {
    throw Error(ErrorKind::Config, "diachronic_relations requires a DE-* model");
  }
  if (activation.kind == ActivationKind::LeakyReLU &&
      !(activation.slope > 0.0 && activation.slope < 1.0)) {
    throw Error(ErrorKind::Config, "leaky relu slope must lie in (0, 1)");
  }
}

TimeEncoder TimeEncoder::fit(const Vocabulary& vocab, bool normalize) {
  TimeEncoder enc;
  enc.normalize = normalize;
  if (!normalize || vocab.num_timestamps() == 0) return enc;
  for (int c = 0; c < 3; ++c) {
    enc.lo[c] = std::numeric_limits<double>::infinity();
    enc.hi[c] = -std::numeric_limits<double>::infinity();
  }
  for (const auto& d : vocab.timestamps()) {
    const auto f = date_ordinal(d);
    for (int c = 0; c < 3; ++c) {
      enc.lo[c] = std::min(enc.lo[c], f[c]);
      enc.hi[c] = std::max(enc.hi[c], f[c]);
    }
  }
  return enc;
}

TimeFeatures TimeEncoder::encode(const Date& date) const {
  auto f = date_ordinal(date);
  if (!normalize) return f;
  for (int c = 0; c < 3; ++c) {
    const double span = hi[c] - lo[c];
    f[c] = span > 0.0 ? (f[c] - lo[c]) / span : 0.0;
  }
  return f;
}

ModelParams::ModelParams(const ModelConfig& config, std::size_t num_entities,
                         std::size_t num_relations, std::size_t num_timestamps)
    : config_(config),
      num_entities_(num_entities),
      num_relations_(num_relations),
      num_timestamps_(num_timestamps) {
  config_.validate();
  const bool de = is_diachronic(config.kind);
  entity_layout_ = {config.dim, de ? config.temporal_dim : 0, de && config.amplitude_per_component};
  relation_layout_ = config.diachronic_relations ? entity_layout_ : DiachronicLayout{config.dim, 0, false};

  const int roles = entity_roles(config.kind);
  static constexpr const char* kEntityNames[] = {"entity_head", "entity_tail"};
  static constexpr const char* kRelationNames[] = {"relation", "relation_inverse"};
  for (int r = 0; r < roles; ++r) {
    tables_.emplace_back(roles == 1 ? "entity" : kEntityNames[r], num_entities,
                         static_cast<std::size_t>(entity_layout_.width()));
  }
  relation_base_ = roles;
  for (int r = 0; r < relation_roles(config.kind); ++r) {
    tables_.emplace_back(kRelationNames[r], num_relations,
                         static_cast<std::size_t>(relation_layout_.width()));
  }
  if (uses_time_table(config.kind)) {
    time_index_ = static_cast<int>(tables_.size());
    tables_.emplace_back("time", num_timestamps, static_cast<std::size_t>(config.dim));
  }
}

Gradients zero_gradients(const ModelParams& params) {
  Gradients g;
  g.reserve(params.tables().size());
  for (const auto& t : params.tables()) g.emplace_back(t.name, t.rows, t.cols);
  return g;
}

void clear(Gradients& grads) {
  for (auto& t : grads) std::fill(t.data.begin(), t.data.end(), 0.0);
}

void normalize_time_vectors(ModelParams& params) {
  if (!params.has_time_table() || params.config().kind != ModelKind::HyTE) return;
  auto& table = params.time_table();
  for (std::size_t i = 0; i < table.rows; ++i) {
    auto row = table.row(i);
    const double norm = l2_norm(row);
    if (norm > 0.0) {
      for (double& x : row) x /= norm;
    }
  }
}

ModelParams init_params(const ModelConfig& config, const Vocabulary& vocab, Rng& rng, double range) {
  ModelParams params(config, vocab.num_entities(), vocab.num_relations(), vocab.num_timestamps());
  for (auto& table : params.tables()) fill_uniform(rng, table.data, range);
  if (config.ablation != Ablation::None && is_diachronic(config.kind)) {
    for (int role = 0; role < entity_roles(config.kind); ++role) {
      auto& table = params.entity_table(role);
      for (std::size_t i = 0; i < table.rows; ++i) {
        write_ablation_constants(params.entity_layout(), config.ablation, table.row(i));
      }
    }
  }
  normalize_time_vectors(params);
  params.time_encoder = TimeEncoder::fit(vocab, config.normalize_dates);
  return params;
}

ScoreEngine::ScoreEngine(const ModelParams& params)
    : params_(params),
      kind_(params.config().kind),
      dim_(params.config().dim),
      entity_size_(static_cast<std::size_t>(entity_roles(kind_) * dim_)),
      relation_size_(static_cast<std::size_t>(relation_roles(kind_) * dim_)),
      activation_(params.config().activation),
      ablation_(is_diachronic(kind_) ? params.config().ablation : Ablation::None) {}

std::size_t ScoreEngine::mask_size() const {
  return supports_dropout(kind_) ? entity_size_ : 0;
}

void ScoreEngine::check_entity(EntityId e) const {
  if (e < 0 || static_cast<std::size_t>(e) >= params_.num_entities()) {
    throw Error(ErrorKind::Index, "entity id " + std::to_string(e) + " out of range");
  }
}

void ScoreEngine::check_ids(const Quadruple& q) const {
  check_entity(q.head);
  check_entity(q.tail);
  if (q.relation < 0 || static_cast<std::size_t>(q.relation) >= params_.num_relations()) {
    throw Error(ErrorKind::Index, "relation id " + std::to_string(q.relation) + " out of range");
  }
  if (uses_time_table(kind_) &&
      (q.time < 0 || static_cast<std::size_t>(q.time) >= params_.num_timestamps())) {
    throw Error(ErrorKind::Index, "timestamp id " + std::to_string(q.time) + " out of range");
  }
}

void ScoreEngine::entity_embedding(EntityId e, const TimeFeatures& t, std::span<double> out) const {
  const auto d = static_cast<std::size_t>(dim_);
  for (int role = 0; role < entity_roles(kind_); ++role) {
    DiachronicView view{params_.entity_layout(), activation_, ablation_,
                        params_.entity_table(role).row(static_cast<std::size_t>(e))};
    deemb(view, t, out.subspan(static_cast<std::size_t>(role) * d, d));
  }
}

void ScoreEngine::relation_embedding(RelationId r, const TimeFeatures& t, std::span<double> out) const {
  const auto d = static_cast<std::size_t>(dim_);
  for (int role = 0; role < relation_roles(kind_); ++role) {
    DiachronicView view{params_.relation_layout(), activation_, Ablation::None,
                        params_.relation_table(role).row(static_cast<std::size_t>(r))};
    deemb(view, t, out.subspan(static_cast<std::size_t>(role) * d, d));
  }
}

std::span<const double> ScoreEngine::time_vector(TimeId id) const {
  if (!params_.has_time_table()) return {};
  return params_.time_table().row(static_cast<std::size_t>(id));
}

double ScoreEngine::score(std::span<const double> h, std::span<const double> r,
                          std::span<const double> t, std::span<const double> tau,
                          std::span<const double> mask) const {
  const auto d = static_cast<std::size_t>(dim_);
  switch (static_counterpart(kind_)) {
    case ModelKind::TransE:
    case ModelKind::TTransE: {
      double sq = 0.0;
      for (std::size_t n = 0; n < d; ++n) {
        double y = h[n] + r[n] - t[n];
        if (!tau.empty()) y += tau[n];
        sq += y * y;
      }
      return -std::sqrt(sq);
    }
    case ModelKind::HyTE: {
      double proj = 0.0;
      for (std::size_t n = 0; n < d; ++n) proj += tau[n] * (h[n] + r[n] - t[n]);
      double sq = 0.0;
      for (std::size_t n = 0; n < d; ++n) {
        const double p = (h[n] + r[n] - t[n]) - proj * tau[n];
        sq += p * p;
      }
      return -std::sqrt(sq);
    }
    case ModelKind::DistMult: {
      double s = 0.0;
      if (mask.empty()) {
        for (std::size_t n = 0; n < d; ++n) s += h[n] * r[n] * t[n];
      } else {
        for (std::size_t n = 0; n < d; ++n) s += mask[n] * h[n] * r[n] * t[n];
      }
      return s;
    }
    case ModelKind::SimplE: {
      // 0.5 * (<h_fwd, r_fwd, t_bwd> + <t_fwd, r_inv, h_bwd>)
      double s1 = 0.0;
      double s2 = 0.0;
      if (mask.empty()) {
        for (std::size_t n = 0; n < d; ++n) {
          s1 += h[n] * r[n] * t[d + n];
          s2 += t[n] * r[d + n] * h[d + n];
        }
      } else {
        for (std::size_t n = 0; n < d; ++n) {
          s1 += mask[n] * h[n] * r[n] * t[d + n];
          s2 += mask[d + n] * t[n] * r[d + n] * h[d + n];
        }
      }
      return 0.5 * (s1 + s2);
    }
    default: break;
  }
  return 0.0;
}

void ScoreEngine::score_backward(std::span<const double> h, std::span<const double> r,
                                 std::span<const double> t, std::span<const double> tau,
                                 std::span<const double> mask, double scale,
                                 std::span<double> gh, std::span<double> gr,
                                 std::span<double> gt, std::span<double> gtau) const {
  const auto d = static_cast<std::size_t>(dim_);
  auto m = [&](std::size_t n) { return mask.empty() ? 1.0 : mask[n]; };
  switch (static_counterpart(kind_)) {
    case ModelKind::TransE:
    case ModelKind::TTransE: {
      double sq = 0.0;
      for (std::size_t n = 0; n < d; ++n) {
        double y = h[n] + r[n] - t[n];
        if (!tau.empty()) y += tau[n];
        sq += y * y;
      }
      const double norm = std::sqrt(sq);
      if (norm == 0.0) return;  // subgradient 0 at the kink
      for (std::size_t n = 0; n < d; ++n) {
        double y = h[n] + r[n] - t[n];
        if (!tau.empty()) y += tau[n];
        const double g = -scale * y / norm;
        gh[n] += g;
        gr[n] += g;
        gt[n] -= g;
        if (!gtau.empty()) gtau[n] += g;
      }
      return;
    }
    case ModelKind::HyTE: {
      double proj = 0.0;
      for (std::size_t n = 0; n < d; ++n) proj += tau[n] * (h[n] + r[n] - t[n]);
      double sq = 0.0;
      for (std::size_t n = 0; n < d; ++n) {
        const double p = (h[n] + r[n] - t[n]) - proj * tau[n];
        sq += p * p;
      }
      const double norm = std::sqrt(sq);
      if (norm == 0.0) return;
      // g_p = -p/|p|; g_y = g_p - (tau.g_p) tau; g_tau = -(tau.y) g_p - (g_p.tau) y
      double gp_dot_tau = 0.0;
      for (std::size_t n = 0; n < d; ++n) {
        const double p = (h[n] + r[n] - t[n]) - proj * tau[n];
        gp_dot_tau += (-p / norm) * tau[n];
      }
      for (std::size_t n = 0; n < d; ++n) {
        const double y = h[n] + r[n] - t[n];
        const double gp = -(y - proj * tau[n]) / norm;
        const double gy = scale * (gp - gp_dot_tau * tau[n]);
        gh[n] += gy;
        gr[n] += gy;
        gt[n] -= gy;
        if (!gtau.empty()) gtau[n] += scale * (-proj * gp - gp_dot_tau * y);
      }
      return;
    }
    case ModelKind::DistMult: {
      for (std::size_t n = 0; n < d; ++n) {
        const double s = scale * m(n);
        gh[n] += s * r[n] * t[n];
        gr[n] += s * h[n] * t[n];
        gt[n] += s * h[n] * r[n];
      }
      return;
    }
    case ModelKind::SimplE: {
      const double half = 0.5 * scale;
      for (std::size_t n = 0; n < d; ++n) {
        const double s1 = half * m(n);
        gh[n] += s1 * r[n] * t[d + n];
        gr[n] += s1 * h[n] * t[d + n];
        gt[d + n] += s1 * h[n] * r[n];
        const double s2 = half * m(d + n);
        gt[n] += s2 * r[d + n] * h[d + n];
        gr[d + n] += s2 * t[n] * h[d + n];
        gh[d + n] += s2 * t[n] * r[d + n];
      }
      return;
    }
    default: return;
  }
}

void ScoreEngine::entity_backward(EntityId e, const TimeFeatures& t, std::span<const double> upstream,
                                  Gradients& grads) const {
  const auto d = static_cast<std::size_t>(dim_);
  for (int role = 0; role < entity_roles(kind_); ++role) {
    const auto idx = static_cast<std::size_t>(params_.entity_table_index(role));
    DiachronicView view{params_.entity_layout(), activation_, ablation_,
                        params_.entity_table(role).row(static_cast<std::size_t>(e))};
    deemb_backward(view, t, upstream.subspan(static_cast<std::size_t>(role) * d, d),
                   grads[idx].row(static_cast<std::size_t>(e)));
  }
}

void ScoreEngine::relation_backward(RelationId r, const TimeFeatures& t,
                                    std::span<const double> upstream, Gradients& grads) const {
  const auto d = static_cast<std::size_t>(dim_);
  for (int role = 0; role < relation_roles(kind_); ++role) {
    const auto idx = static_cast<std::size_t>(params_.relation_table_index(role));
    DiachronicView view{params_.relation_layout(), activation_, Ablation::None,
                        params_.relation_table(role).row(static_cast<std::size_t>(r))};
    deemb_backward(view, t, upstream.subspan(static_cast<std::size_t>(role) * d, d),
                   grads[idx].row(static_cast<std::size_t>(r)));
  }
}

void ScoreEngine::time_backward(TimeId id, std::span<const double> upstream, Gradients& grads) const {
  if (!params_.has_time_table()) return;
  auto row = grads[static_cast<std::size_t>(params_.time_table_index())].row(static_cast<std::size_t>(id));
  for (std::size_t n = 0; n < row.size(); ++n) row[n] += upstream[n];
}

double score(const ModelParams& params, const Quadruple& q) {
  ScoreEngine engine(params);
  engine.check_ids(q);
  const auto tf = engine.features(q.date);
  Vec h(engine.entity_size()), t(engine.entity_size()), r(engine.relation_size());
  engine.entity_embedding(q.head, tf, h);
  engine.entity_embedding(q.tail, tf, t);
  engine.relation_embedding(q.relation, tf, r);
  return engine.score(h, r, t, engine.time_vector(q.time), {});
}

Gradients score_grad(const ModelParams& params, const Quadruple& q) {
  ScoreEngine engine(params);
  engine.check_ids(q);
  const auto tf = engine.features(q.date);
  const auto es = engine.entity_size();
  const auto rs = engine.relation_size();
  Vec h(es), t(es), r(rs);
  engine.entity_embedding(q.head, tf, h);
  engine.entity_embedding(q.tail, tf, t);
  engine.relation_embedding(q.relation, tf, r);
  const auto tau = engine.time_vector(q.time);
  Vec gh(es, 0.0), gt(es, 0.0), gr(rs, 0.0), gtau(tau.size(), 0.0);
  engine.score_backward(h, r, t, tau, {}, 1.0, gh, gr, gt, gtau);
  Gradients grads = zero_gradients(params);
  engine.entity_backward(q.head, tf, gh, grads);
  engine.entity_backward(q.tail, tf, gt, grads);
  engine.relation_backward(q.relation, tf, gr, grads);
  if (!tau.empty()) engine.time_backward(q.time, gtau, grads);
  return grads;
}

std::vector<double> score_batch(const ModelParams& params, const Quadruple& query, QuerySide side,
                                std::span<const EntityId> candidates) {
  if (candidates.empty()) throw Error(ErrorKind::InvalidArgument, "score_batch: no candidates");
  ScoreEngine engine(params);
  engine.check_ids(query);
  for (auto c : candidates) engine.check_entity(c);
  const auto tf = engine.features(query.date);
  Vec fixed(engine.entity_size()), cand(engine.entity_size()), r(engine.relation_size());
  engine.entity_embedding(side == QuerySide::Tail ? query.head : query.tail, tf, fixed);
  engine.relation_embedding(query.relation, tf, r);
  const auto tau = engine.time_vector(query.time);
  std::vector<double> out;
  out.reserve(candidates.size());
  for (auto c : candidates) {
    engine.entity_embedding(c, tf, cand);
    out.push_back(side == QuerySide::Tail ? engine.score(fixed, r, cand, tau, {})
                                          : engine.score(cand, r, fixed, tau, {}));
  }
  return out;
}

}  // namespace dekg
