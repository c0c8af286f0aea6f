#include "dekg/training.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "dekg/error.hpp"

namespace dekg {

void TrainConfig::validate() const {
  model.validate();
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::Config, "learning_rate must be positive");
  if (batch_size <= 0) throw Error(ErrorKind::Config, "batch_size must be positive");
  if (negative_ratio <= 0) throw Error(ErrorKind::Config, "negative_ratio must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::Config, "dropout must lie in [0, 1)");
  if (epochs < 0) throw Error(ErrorKind::Config, "epochs must be >= 0");
  if (validate_every <= 0) throw Error(ErrorKind::Config, "validate_every must be positive");
  if (threads <= 0) throw Error(ErrorKind::Config, "threads must be positive");
}

CandidateSet sample_candidates(const Quadruple& fact, QuerySide side, int n,
                               std::size_t num_entities, Rng& rng) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "negative ratio must be >= 1");
  if (num_entities < 2) throw Error(ErrorKind::InvalidArgument, "need at least two entities");
  CandidateSet set;
  set.side = side;
  const EntityId target = side == QuerySide::Tail ? fact.tail : fact.head;
  set.ids.reserve(static_cast<std::size_t>(n) + 1);
  set.ids.push_back(target);
  const auto ne = static_cast<std::uint64_t>(num_entities);
  for (int i = 0; i < n; ++i) {
    // Offset in [1, |V|-1] keeps the draw uniform over V \ {target}.
    const auto offset = 1 + rng.below(ne - 1);
    set.ids.push_back(static_cast<EntityId>((static_cast<std::uint64_t>(target) + offset) % ne));
  }
  return set;
}

namespace {

void draw_mask(Rng& rng, double p, std::span<double> mask) {
  const double keep = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng.uniform() < p ? 0.0 : keep;
}

/// One query direction: loss and (optionally) gradients.
double query_loss(const ScoreEngine& engine, const Quadruple& q, const TimeFeatures& tf,
                  const CandidateSet& cands, std::span<const double> fixed,
                  std::span<const double> rel, std::span<const double> tau,
                  const LossOptions& opts, Gradients* grads, std::span<double> g_fixed,
                  std::span<double> g_rel, std::span<double> g_tau, Vec& emb_buf, Vec& mask_buf,
                  Vec& score_buf) {
  const auto k = cands.ids.size();
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "empty candidate set");
  const auto es = engine.entity_size();
  const bool dropout = opts.dropout > 0.0 && engine.mask_size() > 0;
  if (dropout && opts.dropout_rng == nullptr) {
    throw Error(ErrorKind::InvalidArgument, "dropout requires a random generator");
  }
  const auto ms = dropout ? engine.mask_size() : 0;
  emb_buf.resize(k * es);
  mask_buf.resize(k * ms);
  score_buf.resize(k);
  const bool tail_side = cands.side == QuerySide::Tail;

  double max_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    engine.check_entity(cands.ids[i]);
    std::span<double> e(emb_buf.data() + i * es, es);
    engine.entity_embedding(cands.ids[i], tf, e);
    std::span<double> mask(mask_buf.data() + i * ms, ms);
    if (dropout) draw_mask(*opts.dropout_rng, opts.dropout, mask);
    const double s = tail_side ? engine.score(fixed, rel, e, tau, mask)
                               : engine.score(e, rel, fixed, tau, mask);
    if (!std::isfinite(s)) {
      throw Error(ErrorKind::Numeric, "non-finite score for fact (" + std::to_string(q.head) + ", " +
                                          std::to_string(q.relation) + ", " + std::to_string(q.tail) + ")");
    }
    score_buf[i] = s;
    max_score = std::max(max_score, s);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::exp(score_buf[i] - max_score);
  const double log_z = max_score + std::log(sum);
  const double loss = log_z - score_buf[0];

  if (grads != nullptr) {
    Vec g_cand(es);
    for (std::size_t i = 0; i < k; ++i) {
      const double coeff = std::exp(score_buf[i] - log_z) - (i == 0 ? 1.0 : 0.0);
      if (coeff == 0.0) continue;
      std::fill(g_cand.begin(), g_cand.end(), 0.0);
      std::span<const double> e(emb_buf.data() + i * es, es);
      std::span<const double> mask(mask_buf.data() + i * ms, ms);
      if (tail_side) {
        engine.score_backward(fixed, rel, e, tau, mask, coeff, g_fixed, g_rel, g_cand, g_tau);
      } else {
        engine.score_backward(e, rel, fixed, tau, mask, coeff, g_cand, g_rel, g_fixed, g_tau);
      }
      engine.entity_backward(cands.ids[i], tf, g_cand, *grads);
    }
  }
  return loss;
}

double loss_impl(const ModelParams& params, std::span<const Quadruple> batch,
                 std::span<const FactCandidates> candidates, Gradients* grads,
                 const LossOptions& opts) {
  if (batch.size() != candidates.size()) {
    throw Error(ErrorKind::InvalidArgument, "batch_loss: one candidate pair per fact required");
  }
  ScoreEngine engine(params);
  const auto es = engine.entity_size();
  const auto rs = engine.relation_size();
  Vec h(es), t(es), r(rs), gh(es), gt(es), gr(rs), gtau(static_cast<std::size_t>(params.config().dim));
  Vec emb_buf, mask_buf, score_buf;
  double total = 0.0;
  for (std::size_t f = 0; f < batch.size(); ++f) {
    const auto& q = batch[f];
    engine.check_ids(q);
    const auto& c = candidates[f];
    if (c.tail.side != QuerySide::Tail || c.head.side != QuerySide::Head ||
        c.tail.ids.empty() || c.head.ids.empty() || c.tail.target() != q.tail ||
        c.head.target() != q.head) {
      throw Error(ErrorKind::InvalidArgument, "batch_loss: malformed candidate set");
    }
    const auto tf = engine.features(q.date);
    engine.entity_embedding(q.head, tf, h);
    engine.entity_embedding(q.tail, tf, t);
    engine.relation_embedding(q.relation, tf, r);
    const auto tau = engine.time_vector(q.time);
    std::span<double> g_tau = tau.empty() ? std::span<double>() : std::span<double>(gtau);
    std::fill(gh.begin(), gh.end(), 0.0);
    std::fill(gt.begin(), gt.end(), 0.0);
    std::fill(gr.begin(), gr.end(), 0.0);
    std::fill(gtau.begin(), gtau.end(), 0.0);

    total += query_loss(engine, q, tf, c.tail, h, r, tau, opts, grads, gh, gr, g_tau, emb_buf,
                        mask_buf, score_buf);
    total += query_loss(engine, q, tf, c.head, t, r, tau, opts, grads, gt, gr, g_tau, emb_buf,
                        mask_buf, score_buf);
    if (grads != nullptr) {
      engine.entity_backward(q.head, tf, gh, *grads);
      engine.entity_backward(q.tail, tf, gt, *grads);
      engine.relation_backward(q.relation, tf, gr, *grads);
      if (!tau.empty()) engine.time_backward(q.time, gtau, *grads);
    }
  }
  return total;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double batch_loss(const ModelParams& params, std::span<const Quadruple> batch,
                  std::span<const FactCandidates> candidates, const LossOptions& options) {
  return loss_impl(params, batch, candidates, nullptr, options);
}

double batch_loss_grad(const ModelParams& params, std::span<const Quadruple> batch,
                       std::span<const FactCandidates> candidates, Gradients& grads,
                       const LossOptions& options) {
  return loss_impl(params, batch, candidates, &grads, options);
}

AdamState::AdamState(const ModelParams& params)
    : first_moment(zero_gradients(params)), second_moment(zero_gradients(params)) {}

void adam_step(AdamState& state, ModelParams& params, const Gradients& grads, double lr) {
  auto& tables = params.tables();
  if (grads.size() != tables.size() || state.first_moment.size() != tables.size()) {
    throw Error(ErrorKind::Dimension, "adam_step: shape mismatch");
  }
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < tables.size(); ++i) {
    auto& theta = tables[i].data;
    const auto& g = grads[i].data;
    auto& m = state.first_moment[i].data;
    auto& v = state.second_moment[i].data;
    if (g.size() != theta.size() || m.size() != theta.size()) {
      throw Error(ErrorKind::Dimension, "adam_step: table shape mismatch");
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void enforce_nonnegativity(ModelParams& params) {
  const auto layout = params.entity_layout();
  const auto dt = static_cast<std::size_t>(layout.temporal_dim);
  for (int role = 0; role < entity_roles(params.config().kind); ++role) {
    auto& table = params.entity_table(role);
    for (std::size_t e = 0; e < table.rows; ++e) {
      auto row = table.row(e);
      for (std::size_t n = 0; n < static_cast<std::size_t>(layout.dim); ++n) row[n] = std::max(row[n], 0.0);
      if (layout.amplitude_per_component) {
        for (int c = 1; c < kDateComponents; ++c) {
          for (std::size_t n = 0; n < dt; ++n) {
            auto& x = row[static_cast<std::size_t>(layout.amplitude_offset(c)) + n];
            x = std::max(x, 0.0);
          }
        }
      }
    }
  }
}

TrainResult train(const TrainConfig& config, const Dataset& ds, const HistoryCallback& on_validate) {
  config.validate();
  if (ds.train.empty()) throw Error(ErrorKind::InvalidArgument, "train: training split is empty");
  const auto ne = ds.vocab.num_entities();

  Rng rng(config.seed);
  TrainResult result;
  ModelParams params = init_params(config.model, ds.vocab, rng);
  if (config.nonnegative_entities) enforce_nonnegativity(params);
  if (config.epochs == 0) {
    result.params = std::move(params);
    return result;
  }

  AdamState adam(params);
  const FilterIndex filter = build_filter_index(ds);
  FilterIndex train_index;
  if (config.filter_negatives) train_index = build_filter_index(ds.train);

  const int workers = config.deterministic ? 1 : config.threads;
  std::vector<Gradients> grads;
  grads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) grads.push_back(zero_gradients(params));

  auto sample = [&](const Quadruple& q, QuerySide side) {
    auto set = sample_candidates(q, side, config.negative_ratio, ne, rng);
    if (!config.filter_negatives) return set;
    for (std::size_t i = 1; i < set.ids.size(); ++i) {
      for (int attempt = 0; attempt < 16; ++attempt) {
        const bool known = side == QuerySide::Tail
                               ? train_index.has_tail(q.head, q.relation, q.time, set.ids[i])
                               : train_index.has_head(q.relation, q.tail, q.time, set.ids[i]);
        if (!known) break;
        set.ids[i] = sample_candidates(q, side, 1, ne, rng).ids[1];
      }
    }
    return set;
  };

  std::vector<std::size_t> order(ds.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Quadruple> batch;
  std::vector<FactCandidates> cands;
  bool validated = false;
  std::uint64_t step = 0;
  const auto bs = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      batch.clear();
      cands.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& q = ds.train[order[i]];
        batch.push_back(q);
        FactCandidates fc;
        fc.tail = sample(q, QuerySide::Tail);
        fc.head = sample(q, QuerySide::Head);
        cands.push_back(std::move(fc));
      }

      double loss = 0.0;
      if (workers == 1) {
        clear(grads[0]);
        LossOptions opts{config.dropout, &rng};
        loss = batch_loss_grad(params, batch, cands, grads[0], opts);
      } else {
        const std::size_t n = batch.size();
        const std::size_t chunk = (n + static_cast<std::size_t>(workers) - 1) / static_cast<std::size_t>(workers);
        std::vector<double> losses(static_cast<std::size_t>(workers), 0.0);
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            try {
              const auto wi = static_cast<std::size_t>(w);
              clear(grads[wi]);
              const std::size_t b = std::min(n, wi * chunk);
              const std::size_t e = std::min(n, b + chunk);
              Rng local(mix_seed(config.seed, step * 1024 + wi));
              LossOptions opts{config.dropout, &local};
              losses[wi] = batch_loss_grad(params, std::span(batch).subspan(b, e - b),
                                           std::span(cands).subspan(b, e - b), grads[wi], opts);
            } catch (...) {
              errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
          });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
          if (e) std::rethrow_exception(e);
        }
        for (int w = 0; w < workers; ++w) {
          loss += losses[static_cast<std::size_t>(w)];
          if (w == 0) continue;
          for (std::size_t t = 0; t < grads[0].size(); ++t) {
            auto& dst = grads[0][t].data;
            const auto& src = grads[static_cast<std::size_t>(w)][t].data;
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
          }
        }
      }
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::Numeric, "training diverged: non-finite loss at epoch " +
                                            std::to_string(epoch));
      }
      epoch_loss += loss;
      adam_step(adam, params, grads[0], config.learning_rate);
      normalize_time_vectors(params);
      if (config.nonnegative_entities) enforce_nonnegativity(params);
      ++step;
    }

    if (epoch % config.validate_every == 0 && !ds.valid.empty()) {
      EvalOptions eval_opts;
      eval_opts.threads = workers;
      const auto report = evaluate(params, ds, Split::Valid, filter, eval_opts);
      HistoryRow row{epoch, epoch_loss / static_cast<double>(ds.train.size()), report.mrr};
      result.history.push_back(row);
      if (on_validate) on_validate(row);
      if (!validated || report.mrr > result.best_val_mrr) {
        result.best_val_mrr = report.mrr;
        result.best_epoch = epoch;
        result.params = params;
      }
      validated = true;
    }
  }
  if (!validated) {
    result.params = std::move(params);
    result.best_epoch = config.epochs;
  }
  return result;
}

}  // namespace dekg
