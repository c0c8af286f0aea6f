#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dekg/data.hpp"
#include "dekg/models.hpp"

namespace dekg {

/// Optimistic: rank = 1 + #strictly-better. Pessimistic: ties count against
/// the target.
enum class TieMode { Optimistic, Pessimistic };

struct RankingReport {
  std::vector<std::int64_t> tail_ranks;  // query (v, r, ?, t), one per fact
  std::vector<std::int64_t> head_ranks;  // query (?, r, u, t)
  double mrr = 0.0;
  double hit1 = 0.0;
  double hit3 = 0.0;
  double hit10 = 0.0;

  std::size_t num_queries() const { return tail_ranks.size() + head_ranks.size(); }
};

/// Computes MRR and Hit@{1,3,10} over both query directions.
RankingReport aggregate_ranks(std::vector<std::int64_t> tail_ranks,
                              std::vector<std::int64_t> head_ranks);

struct EvalOptions {
  TieMode ties = TieMode::Optimistic;
  int threads = 1;
};

/// Filtered rank of the fact's open side among all entities.
std::int64_t rank_query(const ModelParams& params, const Quadruple& fact, QuerySide side,
                        const FilterIndex& filter, TieMode ties = TieMode::Optimistic);

/// Filtered rank from precomputed scores of every entity.
std::int64_t filtered_rank(std::span<const double> scores, EntityId target,
                           std::span<const EntityId> known, TieMode ties);

RankingReport evaluate(const ModelParams& params, std::span<const Quadruple> facts,
                       const FilterIndex& filter, const EvalOptions& options = {});
RankingReport evaluate(const ModelParams& params, const Dataset& ds, Split split,
                       const FilterIndex& filter, const EvalOptions& options = {});

struct ReportRow {
  std::string model;
  std::string split;
  RankingReport report;
};

/// "model,split,mrr,hit1,hit3,hit10" with a header line.
std::string report_csv(std::span<const ReportRow> rows);
/// Fixed-width table; Hit@k printed as percentages.
std::string report_table(std::span<const ReportRow> rows);

}  // namespace dekg
