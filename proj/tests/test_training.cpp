#include <doctest.h>

#include <cmath>
#include <map>

#include "dekg/error.hpp"
#include "dekg/training.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace dekg;

TEST_CASE("candidate sampling") {
  Rng rng(1);
  const Quadruple q{3, 0, 7, Date{}, 0};
  const auto tail = sample_candidates(q, QuerySide::Tail, 500, 10, rng);
  CHECK(tail.ids.size() == 501);
  CHECK(tail.target() == 7);
  std::map<EntityId, int> counts;
  for (std::size_t i = 1; i < tail.ids.size(); ++i) {
    CHECK(tail.ids[i] != 7);
    CHECK(tail.ids[i] >= 0);
    CHECK(tail.ids[i] < 10);
    ++counts[tail.ids[i]];
  }
  CHECK(counts.size() == 9);
  const auto head = sample_candidates(q, QuerySide::Head, 2, 10, rng);
  CHECK(head.target() == 3);
  CHECK_THROWS_AS(sample_candidates(q, QuerySide::Tail, 0, 10, rng), Error);
  CHECK_THROWS_AS(sample_candidates(q, QuerySide::Tail, 3, 1, rng), Error);
}

TEST_CASE("loss with all-equal scores is 2 log(n + 1) per fact") {
  ModelConfig c;
  c.kind = ModelKind::DistMult;
  c.dim = 3;
  ModelParams p(c, 4, 1, 1);  // all zeros: every score is 0
  const Quadruple q{0, 0, 1, Date{0, 0, 1}, 0};
  Rng rng(2);
  std::vector<FactCandidates> cands{{sample_candidates(q, QuerySide::Tail, 1, 4, rng),
                                     sample_candidates(q, QuerySide::Head, 1, 4, rng)}};
  const std::vector<Quadruple> batch{q};
  CHECK(batch_loss(p, batch, cands) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("loss by hand for a two-candidate DistMult query") {
  ModelConfig c;
  c.kind = ModelKind::DistMult;
  c.dim = 1;
  ModelParams p(c, 3, 1, 1);
  p.entity_table(0).data = {1.0, 2.0, 0.5};
  p.relation_table(0).data = {1.0};
  const Quadruple q{0, 0, 1, Date{0, 0, 1}, 0};
  // tail query: target 1 scores 2, distractor 2 scores 0.5
  // head query: target 0 scores 2, distractor 2 scores 1
  FactCandidates fc{{QuerySide::Tail, {1, 2}}, {QuerySide::Head, {0, 2}}};
  const double want = (std::log(std::exp(2.0) + std::exp(0.5)) - 2.0) +
                      (std::log(std::exp(2.0) + std::exp(1.0)) - 2.0);
  const std::vector<Quadruple> batch{q};
  const std::vector<FactCandidates> cands{fc};
  CHECK(batch_loss(p, batch, cands) == doctest::Approx(want).epsilon(1e-14));
  FactCandidates wrong{{QuerySide::Tail, {2, 1}}, {QuerySide::Head, {0, 2}}};
  const std::vector<FactCandidates> bad{wrong};
  CHECK_THROWS_AS(batch_loss(p, batch, bad), Error);
}

TEST_CASE("loss gradients match central differences for every model kind") {
  for (auto k : kAllModelKinds) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto r = testing::check_loss_gradients(k, seed * 1000 + static_cast<std::uint64_t>(k));
      INFO(model_kind_name(k), " worst group ", r.worst_group);
      CHECK(r.max_rel_error < 1e-4);
      if (is_diachronic(k)) CHECK(r.diachronic_groups);
    }
  }
}

TEST_CASE("dropout masks scale kept products") {
  ModelConfig c;
  c.kind = ModelKind::DistMult;
  c.dim = 200;
  ModelParams p(c, 2, 1, 1);
  std::fill(p.entity_table(0).data.begin(), p.entity_table(0).data.end(), 0.1);
  std::fill(p.relation_table(0).data.begin(), p.relation_table(0).data.end(), 1.0);
  const Quadruple q{0, 0, 1, Date{0, 0, 1}, 0};
  const std::vector<Quadruple> batch{q};
  const std::vector<FactCandidates> cands{{{QuerySide::Tail, {1, 0}}, {QuerySide::Head, {0, 1}}}};
  Rng r1(4), r2(4);
  const double a = batch_loss(p, batch, cands, LossOptions{0.5, &r1});
  const double b = batch_loss(p, batch, cands, LossOptions{0.5, &r2});
  CHECK(a == b);
  CHECK(r1.position() == 4 * 200);
  CHECK_THROWS_AS(batch_loss(p, batch, cands, LossOptions{0.5, nullptr}), Error);
}

TEST_CASE("first Adam step moves each coordinate by lr against the gradient sign") {
  ModelConfig c;
  c.kind = ModelKind::DistMult;
  c.dim = 2;
  ModelParams p(c, 1, 1, 1);
  p.entity_table(0).data = {1.0, 1.0};
  Gradients g = zero_gradients(p);
  g[0].data = {0.5, -3.0};
  AdamState s(p);
  adam_step(s, p, g, 0.01);
  CHECK(p.entity_table(0).data[0] == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(p.entity_table(0).data[1] == doctest::Approx(1.01).epsilon(1e-9));
  CHECK(p.relation_table(0).data[0] == 0.0);
  // second step by hand
  g[0].data = {0.5, 0.0};
  adam_step(s, p, g, 0.01);
  const double m = 0.9 * 0.05 + 0.1 * 0.5, v = 0.999 * 0.00025 + 0.001 * 0.25;
  const double step = 0.01 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(p.entity_table(0).data[0] == doctest::Approx(0.99 - step).epsilon(1e-9));
}

TEST_CASE("enforce_nonnegativity clamps amplitudes only") {
  ModelConfig c;
  c.kind = ModelKind::DESimplE;
  c.dim = 2;
  c.temporal_dim = 1;
  c.activation.kind = ActivationKind::Sigmoid;
  ModelParams p(c, 1, 1, 1);
  auto row = p.entity_table(0).row(0);
  row[0] = -0.5;
  row[1] = 0.25;
  row[2] = -1.0;  // a frequency
  enforce_nonnegativity(p);
  CHECK(row[0] == 0.0);
  CHECK(row[1] == 0.25);
  CHECK(row[2] == -1.0);

  Rng rng(3);
  for (auto& t : p.tables()) fill_uniform(rng, t.data, 1.0);
  enforce_nonnegativity(p);
  ScoreEngine e(p);
  Vec z(e.entity_size());
  for (int i = 0; i < 20; ++i) {
    e.entity_embedding(0, e.features(Date{2000 + i, 1 + i % 12, 1 + i}), z);
    for (double x : z) CHECK(x >= 0.0);
  }
}

TEST_CASE("training is deterministic and keeps the best validation parameters") {
  Rng gen(5);
  const auto ds = testing::random_kg(gen, 12, 2, 5, 120);
  TrainConfig c;
  c.model.kind = ModelKind::DEDistMult;
  c.model.dim = 8;
  c.model.temporal_dim = 4;
  c.epochs = 6;
  c.validate_every = 2;
  c.batch_size = 16;
  c.negative_ratio = 5;
  c.learning_rate = 0.01;
  int calls = 0;
  const auto a = train(c, ds, [&](const HistoryRow&) { ++calls; });
  const auto b = train(c, ds);
  CHECK(calls == 3);
  REQUIRE(a.history.size() == 3);
  CHECK(a.params == b.params);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].val_mrr == b.history[i].val_mrr);
  }
  double best = -1;
  for (const auto& h : a.history) best = std::max(best, h.val_mrr);
  CHECK(a.best_val_mrr == best);
  CHECK(a.history.front().loss > a.history.back().loss);

  c.epochs = 0;
  const auto z = train(c, ds);
  CHECK(z.history.empty());
  Rng init_rng(c.seed);
  CHECK(z.params == init_params(c.model, ds.vocab, init_rng));
}

TEST_CASE("parallel training runs and learns") {
  Rng gen(6);
  const auto ds = testing::random_kg(gen, 10, 2, 4, 100);
  TrainConfig c;
  c.model.kind = ModelKind::SimplE;
  c.model.dim = 8;
  c.epochs = 4;
  c.validate_every = 4;
  c.batch_size = 32;
  c.negative_ratio = 4;
  c.deterministic = false;
  c.threads = 3;
  c.learning_rate = 0.01;
  const auto r = train(c, ds);
  CHECK(r.history.size() == 1);
  CHECK(std::isfinite(r.history[0].loss));
}

TEST_CASE("divergence is reported as a numeric error") {
  Rng gen(7);
  const auto ds = testing::random_kg(gen, 8, 1, 3, 60);
  TrainConfig c;
  c.model.kind = ModelKind::DistMult;
  c.model.dim = 4;
  c.epochs = 50;
  c.learning_rate = 1e300;
  c.negative_ratio = 3;
  c.dropout = 0.0;
  try {
    train(c, ds);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
}

TEST_CASE("config validation") {
  TrainConfig c;
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}
