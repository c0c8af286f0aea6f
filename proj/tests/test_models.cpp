#include <doctest.h>

#include <cmath>

#include "dekg/error.hpp"
#include "dekg/models.hpp"
#include "support.hpp"

using namespace dekg;

namespace {

ModelParams random_params(ModelKind kind, Rng& rng, int dim = 6, int dt = 3, bool normalize = false,
                          ActivationKind act = ActivationKind::Sine) {
  ModelConfig c;
  c.kind = kind;
  c.dim = dim;
  c.temporal_dim = dt;
  c.activation.kind = act;
  c.normalize_dates = normalize;
  Vocabulary v;
  for (int i = 0; i < 7; ++i) v.add_entity(testing::ename(i));
  for (int i = 0; i < 3; ++i) v.add_relation(testing::rname(i));
  v.set_timestamps({Date{2014, 1, 1}, Date{2014, 2, 3}, Date{2014, 6, 9}});
  return init_params(c, v, rng, 0.5);
}

Quadruple random_quad(Rng& rng) {
  const TimeId t = static_cast<TimeId>(rng.below(3));
  const Date dates[] = {{2014, 1, 1}, {2014, 2, 3}, {2014, 6, 9}};
  return {static_cast<EntityId>(rng.below(7)), static_cast<RelationId>(rng.below(3)),
          static_cast<EntityId>(rng.below(7)), dates[t], t};
}

}  // namespace

TEST_CASE("model kind names round trip") {
  for (auto k : kAllModelKinds) CHECK(parse_model_kind(model_kind_name(k)) == k);
  CHECK(parse_model_kind("DEDistMult") == ModelKind::DEDistMult);
  CHECK(model_kind_name(ModelKind::DESimplE) == "DE-SimplE");
  CHECK_FALSE(parse_model_kind("RotatE").has_value());
  CHECK(static_counterpart(ModelKind::DETransE) == ModelKind::TransE);
  CHECK(supports_dropout(ModelKind::DESimplE));
  CHECK_FALSE(supports_dropout(ModelKind::TransE));
}

TEST_CASE("hand-computed scores") {
  ModelConfig c;
  c.kind = ModelKind::DistMult;
  c.dim = 2;
  ModelParams p(c, 2, 1, 1);
  p.entity_table(0).data = {1, 2, 3, 4};
  p.relation_table(0).data = {5, 6};
  const Quadruple q{0, 0, 1, Date{0, 0, 1}, 0};
  CHECK(score(p, q) == 63.0);  // 1*5*3 + 2*6*4

  c.kind = ModelKind::TransE;
  ModelParams t(c, 2, 1, 1);
  t.entity_table(0).data = {0, 0, 3, 4};
  t.relation_table(0).data = {0, 0};
  CHECK(score(t, q) == -5.0);

  c.kind = ModelKind::SimplE;
  ModelParams s(c, 2, 1, 1);
  s.entity_table(0).data = {1, 1, 2, 0};  // forward rows
  s.entity_table(1).data = {0, 3, 1, 1};  // backward rows
  s.relation_table(0).data = {1, 2};
  s.relation_table(1).data = {0.5, 0.5};
  // 0.5 * (<(1,1),(1,2),(1,1)> + <(2,0),(.5,.5),(0,3)>) = 0.5 * (3 + 0) = 1.5
  CHECK(score(s, q) == 1.5);

  c.kind = ModelKind::HyTE;
  ModelParams h(c, 2, 1, 1);
  h.entity_table(0).data = {1, 0, 0, 0};
  h.relation_table(0).data = {0, 1};
  h.time_table().data = {1, 0};
  // h + r - t = (1, 1); projection removes the first axis -> (0, 1)
  CHECK(score(h, q) == -1.0);

  c.kind = ModelKind::TTransE;
  ModelParams tt(c, 2, 1, 1);
  tt.entity_table(0).data = {0, 0, 1, 1};
  tt.relation_table(0).data = {1, 0};
  tt.time_table().data = {0, 1};
  CHECK(score(tt, q) == 0.0);
}

TEST_CASE("scores agree with the reference formulas") {
  Rng rng(11);
  for (auto k : kAllModelKinds) {
    for (bool normalize : {false, true}) {
      auto p = random_params(k, rng, 6, 3, normalize);
      for (int i = 0; i < 20; ++i) {
        const auto q = random_quad(rng);
        CHECK(score(p, q) == doctest::Approx(testing::ref_score(p, q)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("score_batch equals per-candidate scores") {
  Rng rng(12);
  for (auto k : kAllModelKinds) {
    auto p = random_params(k, rng);
    const auto q = random_quad(rng);
    const std::vector<EntityId> cands{0, 3, 6, 2, 2};
    for (auto side : {QuerySide::Head, QuerySide::Tail}) {
      const auto s = score_batch(p, q, side, cands);
      for (std::size_t i = 0; i < cands.size(); ++i) {
        auto c = q;
        (side == QuerySide::Tail ? c.tail : c.head) = cands[i];
        CHECK(s[i] == score(p, c));
      }
    }
    CHECK_THROWS_AS(score_batch(p, q, QuerySide::Tail, {}), Error);
  }
}

TEST_CASE("score gradients match finite differences") {
  Rng rng(13);
  for (auto k : kAllModelKinds) {
    auto p = random_params(k, rng, 4, 2, true, ActivationKind::Tanh);
    const auto q = random_quad(rng);
    const auto g = score_grad(p, q);
    REQUIRE(g.size() == p.tables().size());
    for (std::size_t ti = 0; ti < p.tables().size(); ++ti) {
      ScalarFn f = [&](std::span<const double> x) {
        ModelParams c = p;
        c.tables()[ti].data.assign(x.begin(), x.end());
        return score(c, q);
      };
      const auto fd = finite_diff_grad(f, p.tables()[ti].data, 1e-6);
      for (std::size_t i = 0; i < fd.size(); ++i) {
        CHECK(g[ti].data[i] == doctest::Approx(fd[i]).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("DE kinds with temporal_dim 0 reduce to their static counterparts") {
  for (auto de : {ModelKind::DETransE, ModelKind::DEDistMult, ModelKind::DESimplE}) {
    Rng r1(21), r2(21);
    auto a = random_params(de, r1, 6, 0);
    auto b = random_params(static_counterpart(de), r2, 6, 0);
    REQUIRE(a.tables().size() == b.tables().size());
    for (std::size_t i = 0; i < a.tables().size(); ++i) CHECK(a.tables()[i].data == b.tables()[i].data);
    CHECK(r1.position() == r2.position());
    Rng qr(3);
    for (int i = 0; i < 50; ++i) {
      const auto q = random_quad(qr);
      CHECK(score(a, q) == score(b, q));
    }
  }
}

TEST_CASE("table shapes") {
  Rng rng(1);
  auto p = random_params(ModelKind::DESimplE, rng, 6, 2);
  CHECK(p.tables().size() == 4);
  CHECK(p.entity_table(0).cols == 6 + 12);
  CHECK(p.relation_table(1).cols == 6);
  auto h = random_params(ModelKind::HyTE, rng);
  CHECK(h.has_time_table());
  for (std::size_t t = 0; t < 3; ++t) CHECK(l2_norm(h.time_table().row(t)) == doctest::Approx(1.0));
  ModelConfig bad;
  bad.kind = ModelKind::DistMult;
  bad.diachronic_relations = true;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.kind = ModelKind::DEDistMult;
  bad.temporal_dim = 200;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("out-of-range ids are rejected") {
  Rng rng(1);
  auto p = random_params(ModelKind::DistMult, rng);
  try {
    score(p, Quadruple{9, 0, 1, Date{}, 0});
    FAIL("expected index error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Index);
  }
}
