#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dekg/core_math.hpp"
#include "dekg/data.hpp"
#include "dekg/diachronic.hpp"

namespace dekg {

enum class ModelKind { TransE, DistMult, SimplE, DETransE, DEDistMult, DESimplE, TTransE, HyTE };

inline constexpr ModelKind kAllModelKinds[] = {
    ModelKind::TransE,   ModelKind::DistMult,   ModelKind::SimplE,  ModelKind::DETransE,
    ModelKind::DEDistMult, ModelKind::DESimplE, ModelKind::TTransE, ModelKind::HyTE};

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);

bool is_diachronic(ModelKind kind);
bool uses_time_table(ModelKind kind);
/// 2 for the SimplE family (head-role and tail-role vectors), else 1.
int entity_roles(ModelKind kind);
int relation_roles(ModelKind kind);
/// DE-X -> X; other kinds map to themselves.
ModelKind static_counterpart(ModelKind kind);
/// Dropout acts on the element-wise products of the bilinear families only.
bool supports_dropout(ModelKind kind);

struct ModelConfig {
  ModelKind kind = ModelKind::DESimplE;
  int dim = 100;
  int temporal_dim = 64;  // ignored by non-diachronic kinds
  Activation activation;
  bool diachronic_relations = false;
  bool amplitude_per_component = false;
  Ablation ablation = Ablation::None;
  bool normalize_dates = false;

  /// Throws Config on inconsistent settings.
  void validate() const;
};

/// Row-major parameter table.
struct Table {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;

  Table() = default;
  Table(std::string name, std::size_t rows, std::size_t cols)
      : name(std::move(name)), rows(rows), cols(cols), data(rows * cols, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  bool operator==(const Table&) const = default;
};

/// Maps dates to the three real inputs of the temporal features, optionally
/// min-max scaled per component over the vocabulary's timestamps.
struct TimeEncoder {
  bool normalize = false;
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{1.0, 1.0, 1.0};

  static TimeEncoder fit(const Vocabulary& vocab, bool normalize);
  TimeFeatures encode(const Date& date) const;

  bool operator==(const TimeEncoder&) const = default;
};

/// All learnable state of one model. Entity rows (and relation rows in the
/// diachronic-relations variant) use the DiachronicLayout packing; static
/// kinds use the same packing with temporal_dim = 0.
class ModelParams {
 public:
  ModelParams() = default;
  ModelParams(const ModelConfig& config, std::size_t num_entities, std::size_t num_relations,
              std::size_t num_timestamps);

  const ModelConfig& config() const { return config_; }
  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return num_relations_; }
  std::size_t num_timestamps() const { return num_timestamps_; }

  std::vector<Table>& tables() { return tables_; }
  const std::vector<Table>& tables() const { return tables_; }

  Table& entity_table(int role) { return tables_[static_cast<std::size_t>(role)]; }
  const Table& entity_table(int role) const { return tables_[static_cast<std::size_t>(role)]; }
  Table& relation_table(int role) { return tables_[static_cast<std::size_t>(relation_base_ + role)]; }
  const Table& relation_table(int role) const {
    return tables_[static_cast<std::size_t>(relation_base_ + role)];
  }
  bool has_time_table() const { return time_index_ >= 0; }
  Table& time_table() { return tables_[static_cast<std::size_t>(time_index_)]; }
  const Table& time_table() const { return tables_[static_cast<std::size_t>(time_index_)]; }

  int entity_table_index(int role) const { return role; }
  int relation_table_index(int role) const { return relation_base_ + role; }
  int time_table_index() const { return time_index_; }

  DiachronicLayout entity_layout() const { return entity_layout_; }
  DiachronicLayout relation_layout() const { return relation_layout_; }

  TimeEncoder time_encoder;

  bool operator==(const ModelParams& other) const {
    return tables_ == other.tables_ && time_encoder == other.time_encoder;
  }

 private:
  ModelConfig config_;
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::size_t num_timestamps_ = 0;
  DiachronicLayout entity_layout_;
  DiachronicLayout relation_layout_;
  int relation_base_ = 1;
  int time_index_ = -1;
  std::vector<Table> tables_;
};

using Gradients = std::vector<Table>;

Gradients zero_gradients(const ModelParams& params);
void clear(Gradients& grads);

/// Uniform [-range, range] initialization, tables in order, rows in order.
/// Ablated components are set to their constants; HyTE time vectors are
/// normalized to unit length.
ModelParams init_params(const ModelConfig& config, const Vocabulary& vocab, Rng& rng,
                        double range = 0.1);

void normalize_time_vectors(ModelParams& params);

enum class QuerySide { Head, Tail };

/// Embedding assembly, score and backward pass over assembled vectors. The
/// public score/score_grad/score_batch functions, the loss and the evaluator
/// all go through this one code path.
class ScoreEngine {
 public:
  explicit ScoreEngine(const ModelParams& params);

  std::size_t entity_size() const { return entity_size_; }
  std::size_t relation_size() const { return relation_size_; }
  std::size_t mask_size() const;
  int dim() const { return dim_; }
  ModelKind kind() const { return kind_; }

  TimeFeatures features(const Date& date) const { return params_.time_encoder.encode(date); }

  /// Writes all roles of the entity's embedding at time t ([head-role | tail-role]).
  void entity_embedding(EntityId e, const TimeFeatures& t, std::span<double> out) const;
  void relation_embedding(RelationId r, const TimeFeatures& t, std::span<double> out) const;
  std::span<const double> time_vector(TimeId id) const;

  /// `mask` is empty (no dropout) or mask_size() multipliers.
  double score(std::span<const double> head, std::span<const double> rel,
               std::span<const double> tail, std::span<const double> time,
               std::span<const double> mask) const;

  /// Accumulates scale * d score / d(head, rel, tail, time).
  void score_backward(std::span<const double> head, std::span<const double> rel,
                      std::span<const double> tail, std::span<const double> time,
                      std::span<const double> mask, double scale, std::span<double> g_head,
                      std::span<double> g_rel, std::span<double> g_tail,
                      std::span<double> g_time) const;

  void entity_backward(EntityId e, const TimeFeatures& t, std::span<const double> upstream,
                       Gradients& grads) const;
  void relation_backward(RelationId r, const TimeFeatures& t, std::span<const double> upstream,
                         Gradients& grads) const;
  void time_backward(TimeId id, std::span<const double> upstream, Gradients& grads) const;

  void check_ids(const Quadruple& q) const;
  void check_entity(EntityId e) const;

 private:
  const ModelParams& params_;
  ModelKind kind_;
  int dim_;
  std::size_t entity_size_;
  std::size_t relation_size_;
  Activation activation_;
  Ablation ablation_;
};

double score(const ModelParams& params, const Quadruple& q);
Gradients score_grad(const ModelParams& params, const Quadruple& q);
/// Scores of the query with the open side replaced by each candidate.
std::vector<double> score_batch(const ModelParams& params, const Quadruple& query, QuerySide side,
                                std::span<const EntityId> candidates);

}  // namespace dekg
