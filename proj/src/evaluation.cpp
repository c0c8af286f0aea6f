#include "dekg/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

#include "dekg/error.hpp"

namespace dekg {

RankingReport aggregate_ranks(std::vector<std::int64_t> tail_ranks,
                              std::vector<std::int64_t> head_ranks) {
  RankingReport r;
  r.tail_ranks = std::move(tail_ranks);
  r.head_ranks = std::move(head_ranks);
  const auto n = r.num_queries();
  if (n == 0) return r;
  double rr = 0.0;
  std::size_t h1 = 0, h3 = 0, h10 = 0;
  for (const auto* ranks : {&r.tail_ranks, &r.head_ranks}) {
    for (auto k : *ranks) {
      rr += 1.0 / static_cast<double>(k);
      h1 += k <= 1;
      h3 += k <= 3;
      h10 += k <= 10;
    }
  }
  const auto denom = static_cast<double>(n);
  r.mrr = rr / denom;
  r.hit1 = static_cast<double>(h1) / denom;
  r.hit3 = static_cast<double>(h3) / denom;
  r.hit10 = static_cast<double>(h10) / denom;
  return r;
}

std::int64_t filtered_rank(std::span<const double> scores, EntityId target,
                           std::span<const EntityId> known, TieMode ties) {
  const double s = scores[static_cast<std::size_t>(target)];
  auto beats = [&](std::size_t u) {
    return ties == TieMode::Optimistic ? scores[u] > s : scores[u] >= s;
  };
  std::int64_t better = 0;
  for (std::size_t u = 0; u < scores.size(); ++u) {
    if (static_cast<EntityId>(u) != target && beats(u)) ++better;
  }
  for (auto u : known) {
    if (u != target && beats(static_cast<std::size_t>(u))) --better;
  }
  return 1 + better;
}

std::int64_t rank_query(const ModelParams& params, const Quadruple& fact, QuerySide side,
                        const FilterIndex& filter, TieMode ties) {
  std::vector<EntityId> all(params.num_entities());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<EntityId>(i);
  const auto scores = score_batch(params, fact, side, all);
  if (side == QuerySide::Tail) {
    return filtered_rank(scores, fact.tail, filter.tails(fact.head, fact.relation, fact.time), ties);
  }
  return filtered_rank(scores, fact.head, filter.heads(fact.relation, fact.tail, fact.time), ties);
}

namespace {

/// Ranks the facts listed in `order` (indices into `facts`), reusing one
/// all-entity embedding table per timestamp.
void rank_group(const ModelParams& params, std::span<const Quadruple> facts,
                std::span<const std::size_t> order, const FilterIndex& filter, TieMode ties,
                std::vector<std::int64_t>& tail_ranks, std::vector<std::int64_t>& head_ranks) {
  ScoreEngine engine(params);
  const auto ne = params.num_entities();
  const auto es = engine.entity_size();
  const bool time_dependent = is_diachronic(params.config().kind);
  Vec cache(ne * es);
  Vec rel(engine.relation_size());
  std::vector<double> scores(ne);
  bool cached = false;
  Date cached_date;
  auto emb = [&](EntityId e) {
    return std::span<const double>(cache.data() + static_cast<std::size_t>(e) * es, es);
  };
  for (auto idx : order) {
    const auto& q = facts[idx];
    engine.check_ids(q);
    const auto tf = engine.features(q.date);
    if (!cached || (time_dependent && q.date != cached_date)) {
      for (std::size_t e = 0; e < ne; ++e) {
        engine.entity_embedding(static_cast<EntityId>(e), tf, std::span<double>(cache.data() + e * es, es));
      }
      cached = true;
      cached_date = q.date;
    }
    engine.relation_embedding(q.relation, tf, rel);
    const auto tau = engine.time_vector(q.time);

    const auto head = emb(q.head);
    for (std::size_t u = 0; u < ne; ++u) scores[u] = engine.score(head, rel, emb(static_cast<EntityId>(u)), tau, {});
    tail_ranks[idx] = filtered_rank(scores, q.tail, filter.tails(q.head, q.relation, q.time), ties);

    const auto tail = emb(q.tail);
    for (std::size_t v = 0; v < ne; ++v) scores[v] = engine.score(emb(static_cast<EntityId>(v)), rel, tail, tau, {});
    head_ranks[idx] = filtered_rank(scores, q.head, filter.heads(q.relation, q.tail, q.time), ties);
  }
}

}  // namespace

RankingReport evaluate(const ModelParams& params, std::span<const Quadruple> facts,
                       const FilterIndex& filter, const EvalOptions& options) {
  if (facts.empty()) throw Error(ErrorKind::InvalidArgument, "evaluate: split is empty");

  // Group by date so time-dependent entity tables are built once per date.
  std::vector<std::size_t> order(facts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return facts[a].date < facts[b].date; });

  std::vector<std::int64_t> tail_ranks(facts.size()), head_ranks(facts.size());
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(facts.size())));
  if (threads == 1) {
    rank_group(params, facts, order, filter, options.ties, tail_ranks, head_ranks);
  } else {
    // Contiguous chunks of the date-sorted order; each worker writes disjoint slots.
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    const std::size_t chunk = (order.size() + static_cast<std::size_t>(threads) - 1) / static_cast<std::size_t>(threads);
    for (int w = 0; w < threads; ++w) {
      const std::size_t begin = std::min(order.size(), static_cast<std::size_t>(w) * chunk);
      const std::size_t end = std::min(order.size(), begin + chunk);
      workers.emplace_back([&, w, begin, end] {
        try {
          rank_group(params, facts, std::span<const std::size_t>(order).subspan(begin, end - begin),
                     filter, options.ties, tail_ranks, head_ranks);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return aggregate_ranks(std::move(tail_ranks), std::move(head_ranks));
}

RankingReport evaluate(const ModelParams& params, const Dataset& ds, Split split,
                       const FilterIndex& filter, const EvalOptions& options) {
  return evaluate(params, ds.split(split), filter, options);
}

std::string report_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << "model,split,mrr,hit1,hit3,hit10\n";
  char buf[160];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f", row.report.mrr, row.report.hit1,
                  row.report.hit3, row.report.hit10);
    out << row.model << ',' << row.split << ',' << buf << '\n';
  }
  return out.str();
}

std::string report_table(std::span<const ReportRow> rows) {
  std::ostringstream out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-14s %-6s %7s %7s %7s %7s\n", "Model", "Split", "MRR", "Hit@1",
                "Hit@3", "Hit@10");
  out << buf;
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof buf, "%-14s %-6s %7.3f %7.1f %7.1f %7.1f\n", row.model.c_str(),
                  row.split.c_str(), row.report.mrr, 100.0 * row.report.hit1,
                  100.0 * row.report.hit3, 100.0 * row.report.hit10);
    out << buf;
  }
  return out.str();
}

}  // namespace dekg
