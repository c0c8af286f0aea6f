#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dekg/data.hpp"
#include "dekg/evaluation.hpp"
#include "dekg/models.hpp"

namespace testing {

using dekg::Date;
using dekg::RawFact;

inline std::string ename(int i) { return "e" + std::to_string(i); }
inline std::string rname(int i) { return "r" + std::to_string(i); }

/// Random facts over nv entities, nr relations and nt consecutive days of
/// 2014; roughly 80/10/10 split with non-empty valid and test.
inline dekg::Dataset random_kg(dekg::Rng& rng, int nv, int nr, int nt, int nfacts) {
  std::vector<RawFact> all;
  std::set<std::tuple<int, int, int, int>> seen;
  for (int i = 0; i < nfacts * 4 && static_cast<int>(all.size()) < nfacts; ++i) {
    const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(nv)));
    const int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(nr)));
    const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(nv)));
    const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(nt)));
    if (!seen.insert({v, r, u, t}).second) continue;
    all.push_back({ename(v), rname(r), ename(u), Date{2014, 1 + t / 28, 1 + t % 28}});
  }
  std::vector<RawFact> train, valid, test;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i % 10 == 1) valid.push_back(all[i]);
    else if (i % 10 == 2) test.push_back(all[i]);
    else train.push_back(all[i]);
  }
  return dekg::build_dataset(train, valid, test);
}

// ---- independent reference implementations ----

inline double ref_act(dekg::ActivationKind k, double x) {
  switch (k) {
    case dekg::ActivationKind::Sine: return std::sin(x);
    case dekg::ActivationKind::Tanh: return std::tanh(x);
    case dekg::ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case dekg::ActivationKind::LeakyReLU: return x > 0 ? x : 0.1 * x;
    case dekg::ActivationKind::SquaredExponential: return std::exp(-x * x);
  }
  return 0.0;
}

/// Diachronic embedding of one packed row, written out directly.
inline std::vector<double> ref_deemb(const std::vector<double>& row, int d, int dt,
                                     dekg::ActivationKind act, std::array<double, 3> t) {
  std::vector<double> z(static_cast<std::size_t>(d));
  for (int n = 0; n < d; ++n) {
    if (n >= dt) {
      z[n] = row[n];
      continue;
    }
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double w = row[d + c * dt + n];
      const double b = row[d + (3 + c) * dt + n];
      s += ref_act(act, w * t[c] + b);
    }
    z[n] = row[n] * s;
  }
  return z;
}

inline std::vector<double> row_of(const dekg::Table& t, std::size_t i) {
  auto r = t.row(i);
  return {r.begin(), r.end()};
}

/// Score written from the model definitions, for non-ablated entity rows
/// and static relations.
inline double ref_score(const dekg::ModelParams& p, const dekg::Quadruple& q) {
  using dekg::ModelKind;
  const auto& c = p.config();
  const int d = c.dim;
  const int dt = dekg::is_diachronic(c.kind) ? c.temporal_dim : 0;
  const auto t = p.time_encoder.encode(q.date);
  auto ent = [&](int role, int e) {
    return ref_deemb(row_of(p.entity_table(role), static_cast<std::size_t>(e)), d, dt, c.activation.kind, t);
  };
  auto rel = [&](int role) { return row_of(p.relation_table(role), static_cast<std::size_t>(q.relation)); };
  switch (dekg::static_counterpart(c.kind)) {
    case ModelKind::TransE: {
      const auto h = ent(0, q.head), u = ent(0, q.tail), r = rel(0);
      double s = 0;
      for (int n = 0; n < d; ++n) s += (h[n] + r[n] - u[n]) * (h[n] + r[n] - u[n]);
      return -std::sqrt(s);
    }
    case ModelKind::DistMult: {
      const auto h = ent(0, q.head), u = ent(0, q.tail), r = rel(0);
      double s = 0;
      for (int n = 0; n < d; ++n) s += h[n] * r[n] * u[n];
      return s;
    }
    case ModelKind::SimplE: {
      const auto hf = ent(0, q.head), hb = ent(1, q.head), tf = ent(0, q.tail), tb = ent(1, q.tail);
      const auto rf = rel(0), ri = rel(1);
      double a = 0, b = 0;
      for (int n = 0; n < d; ++n) {
        a += hf[n] * rf[n] * tb[n];
        b += tf[n] * ri[n] * hb[n];
      }
      return 0.5 * (a + b);
    }
    case ModelKind::TTransE: {
      const auto h = ent(0, q.head), u = ent(0, q.tail), r = rel(0);
      const auto tau = row_of(p.time_table(), static_cast<std::size_t>(q.time));
      double s = 0;
      for (int n = 0; n < d; ++n) s += (h[n] + r[n] + tau[n] - u[n]) * (h[n] + r[n] + tau[n] - u[n]);
      return -std::sqrt(s);
    }
    case ModelKind::HyTE: {
      const auto h = ent(0, q.head), u = ent(0, q.tail), r = rel(0);
      const auto w = row_of(p.time_table(), static_cast<std::size_t>(q.time));
      std::vector<double> x(d);
      double dotp = 0;
      for (int n = 0; n < d; ++n) {
        x[n] = h[n] + r[n] - u[n];
        dotp += w[n] * x[n];
      }
      double s = 0;
      for (int n = 0; n < d; ++n) s += (x[n] - dotp * w[n]) * (x[n] - dotp * w[n]);
      return -std::sqrt(s);
    }
    default: break;
  }
  return 0.0;
}

/// Brute force: score every replacement with the public score(), sort, and
/// skip known true competitors by set lookup.
inline std::int64_t oracle_rank(const dekg::ModelParams& p, const dekg::Dataset& ds,
                                const dekg::Quadruple& q, bool tail_side) {
  std::set<std::tuple<int, int, int, int>> known;
  for (auto s : {dekg::Split::Train, dekg::Split::Valid, dekg::Split::Test}) {
    for (const auto& f : ds.split(s)) known.insert({f.head, f.relation, f.tail, f.time});
  }
  const auto ne = static_cast<int>(ds.vocab.num_entities());
  std::vector<std::pair<double, int>> scored;
  for (int e = 0; e < ne; ++e) {
    auto c = q;
    (tail_side ? c.tail : c.head) = e;
    scored.push_back({dekg::score(p, c), e});
  }
  std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) { return a.first > b.first; });
  const int target = tail_side ? q.tail : q.head;
  double target_score = 0;
  for (auto& [s, e] : scored) {
    if (e == target) target_score = s;
  }
  std::int64_t rank = 1;
  for (auto& [s, e] : scored) {
    if (e == target || !(s > target_score)) continue;
    auto c = q;
    (tail_side ? c.tail : c.head) = e;
    if (known.count({c.head, c.relation, c.tail, c.time})) continue;
    ++rank;
  }
  return rank;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("dekg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
