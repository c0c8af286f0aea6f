#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dekg/models.hpp"
#include "dekg/training.hpp"

namespace testing {

// Relative error is measured against max(|g|, fd round-off / kGradRelTol):
// groups that saturated activations on raw years push down to ~1e-10 are
// then judged at the level of the central difference's own noise.
inline constexpr double kGradRelTol = 1e-4;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_group;
  int groups = 0;
  bool diachronic_groups = false;
};

struct ColumnGroup {
  std::string name;
  std::size_t table;
  std::size_t begin;
  std::size_t count;
};

inline std::vector<ColumnGroup> column_groups(const dekg::ModelParams& p) {
  std::vector<ColumnGroup> out;
  const auto& tables = p.tables();
  for (std::size_t ti = 0; ti < tables.size(); ++ti) {
    const bool entity = static_cast<int>(ti) < dekg::entity_roles(p.config().kind);
    const bool relation = !entity && static_cast<int>(ti) != p.time_table_index();
    dekg::DiachronicLayout layout{static_cast<int>(tables[ti].cols), 0, false};
    if (entity) layout = p.entity_layout();
    if (relation) layout = p.relation_layout();
    const auto& name = tables[ti].name;
    if (layout.temporal_dim == 0) {
      out.push_back({name, ti, 0, tables[ti].cols});
      continue;
    }
    const auto dt = static_cast<std::size_t>(layout.temporal_dim);
    out.push_back({name + ".a", ti, 0, static_cast<std::size_t>(layout.dim)});
    const char* comp[] = {"year", "month", "day"};
    for (int c = 0; c < 3; ++c) {
      out.push_back({name + ".w_" + comp[c], ti, static_cast<std::size_t>(layout.frequency_offset(c)), dt});
      out.push_back({name + ".b_" + comp[c], ti, static_cast<std::size_t>(layout.phase_offset(c)), dt});
      if (layout.amplitude_per_component && c > 0) {
        out.push_back({name + ".a_" + comp[c], ti, static_cast<std::size_t>(layout.amplitude_offset(c)), dt});
      }
    }
  }
  return out;
}

/// One random small instance (d = 8, |V| = 20, |T| = 5): compares the
/// analytic gradient of batch_loss against central differences, group by
/// group, by relative L2 error.
inline GradCheckResult check_loss_gradients(dekg::ModelKind kind, std::uint64_t seed) {
  using namespace dekg;
  Rng rng(seed);
  ModelConfig c;
  c.kind = kind;
  c.dim = 8;
  c.temporal_dim = 1 + static_cast<int>(rng.below(8));
  const ActivationKind acts[] = {ActivationKind::Sine, ActivationKind::Tanh, ActivationKind::Sigmoid,
                                 ActivationKind::SquaredExponential};
  c.activation.kind = acts[rng.below(4)];
  c.normalize_dates = rng.below(2) == 1;
  if (is_diachronic(kind)) {
    c.amplitude_per_component = rng.below(2) == 1;
    c.diachronic_relations = rng.below(3) == 0;
  }
  Vocabulary v;
  for (int i = 0; i < 20; ++i) v.add_entity("e" + std::to_string(i));
  for (int i = 0; i < 3; ++i) v.add_relation("r" + std::to_string(i));
  std::vector<Date> dates;
  for (int t = 0; t < 5; ++t) dates.push_back(Date{2014, 1 + t * 2, 3 + t * 5});
  v.set_timestamps(dates);
  ModelParams p = init_params(c, v, rng, 0.5);

  const int nfacts = 3;
  const int nneg = 4;
  std::vector<Quadruple> batch;
  std::vector<FactCandidates> cands;
  for (int i = 0; i < nfacts; ++i) {
    const auto t = static_cast<TimeId>(rng.below(5));
    Quadruple q{static_cast<EntityId>(rng.below(20)), static_cast<RelationId>(rng.below(3)),
                static_cast<EntityId>(rng.below(20)), dates[static_cast<std::size_t>(t)], t};
    batch.push_back(q);
    cands.push_back({sample_candidates(q, QuerySide::Tail, nneg, 20, rng),
                     sample_candidates(q, QuerySide::Head, nneg, 20, rng)});
  }
  const double dropout = supports_dropout(kind) && rng.below(2) == 1 ? 0.3 : 0.0;
  const std::uint64_t mask_seed = rng.next();

  auto loss_at = [&](const ModelParams& params) {
    Rng masks(mask_seed);
    return batch_loss(params, batch, cands, LossOptions{dropout, &masks});
  };
  Gradients g = zero_gradients(p);
  {
    Rng masks(mask_seed);
    batch_loss_grad(p, batch, cands, g, LossOptions{dropout, &masks});
  }

  GradCheckResult res;
  const double eps = 1e-6;
  const double base_loss = loss_at(p);
  ModelParams work = p;
  for (const auto& grp : column_groups(p)) {
    auto& table = work.tables()[grp.table];
    double diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t r = 0; r < table.rows; ++r) {
      for (std::size_t k = 0; k < grp.count; ++k) {
        const std::size_t idx = r * table.cols + grp.begin + k;
        const double x = table.data[idx];
        table.data[idx] = x + eps;
        const double up = loss_at(work);
        table.data[idx] = x - eps;
        const double down = loss_at(work);
        table.data[idx] = x;
        const double fd = (up - down) / (2 * eps);
        const double an = g[grp.table].data[idx];
        diff2 += (fd - an) * (fd - an);
        a2 += an * an;
        n2 += fd * fd;
      }
    }
    const double entries = static_cast<double>(table.rows * grp.count);
    const double noise = 2 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(base_loss)) / eps *
                         std::sqrt(entries);
    const double denom = std::max({std::sqrt(a2), std::sqrt(n2), noise / kGradRelTol});
    const double rel = std::sqrt(diff2) / denom;
    ++res.groups;
    if (grp.name.find(".w_") != std::string::npos) res.diachronic_groups = true;
    if (rel > res.max_rel_error || res.worst_group.empty()) {
      if (rel >= res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_group = grp.name;
      }
    }
  }
  return res;
}

}  // namespace testing
