#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "dekg/core_math.hpp"
#include "dekg/data.hpp"
#include "dekg/evaluation.hpp"
#include "dekg/models.hpp"

namespace dekg {

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 0.001;
  int batch_size = 512;
  int negative_ratio = 500;
  double dropout = 0.4;
  int epochs = 500;
  int validate_every = 20;
  std::uint64_t seed = 1;
  /// Single-threaded and bitwise reproducible when true; `threads` is ignored.
  bool deterministic = true;
  int threads = 1;
  /// Resample distractors that form known training facts.
  bool filter_negatives = false;
  /// Clamp entity amplitudes to >= 0 after every step (entailment setting).
  bool nonnegative_entities = false;
  TimeFormat time_format = TimeFormat::Auto;

  void validate() const;
};

struct CandidateSet {
  QuerySide side = QuerySide::Tail;
  /// ids[0] is the target; the rest are distractors.
  std::vector<EntityId> ids;

  EntityId target() const { return ids.front(); }
};

/// Target plus n distractors drawn uniformly from the other |V| - 1 entities.
CandidateSet sample_candidates(const Quadruple& fact, QuerySide side, int n,
                               std::size_t num_entities, Rng& rng);

struct FactCandidates {
  CandidateSet tail;  // for (v, r, ?, t)
  CandidateSet head;  // for (?, r, u, t)
};

struct LossOptions {
  double dropout = 0.0;
  Rng* dropout_rng = nullptr;  // masks are drawn only when dropout > 0
};

/// Sum over facts of the negative log-softmax of the target in both
/// candidate sets.
double batch_loss(const ModelParams& params, std::span<const Quadruple> batch,
                  std::span<const FactCandidates> candidates, const LossOptions& options = {});

/// Same loss; accumulates its gradient into `grads`.
double batch_loss_grad(const ModelParams& params, std::span<const Quadruple> batch,
                       std::span<const FactCandidates> candidates, Gradients& grads,
                       const LossOptions& options = {});

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Table> first_moment;
  std::vector<Table> second_moment;

  AdamState() = default;
  explicit AdamState(const ModelParams& params);
};

void adam_step(AdamState& state, ModelParams& params, const Gradients& grads, double lr);

/// Clamps entity amplitude entries (the whole row for static kinds) to >= 0.
void enforce_nonnegativity(ModelParams& params);

struct HistoryRow {
  int epoch = 0;
  double loss = 0.0;  // mean per training fact over the epoch
  double val_mrr = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<HistoryRow> history;
  int best_epoch = 0;
  double best_val_mrr = std::numeric_limits<double>::quiet_NaN();
};

using HistoryCallback = std::function<void(const HistoryRow&)>;

/// Shuffled mini-batch training with validation every `validate_every`
/// epochs; returns the parameters with the best filtered validation MRR
/// (the final parameters when no validation ran).
TrainResult train(const TrainConfig& config, const Dataset& ds, const HistoryCallback& on_validate = {});

}  // namespace dekg
