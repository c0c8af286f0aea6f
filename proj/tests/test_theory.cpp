#include <doctest.h>

#include <cmath>

#include "dekg/error.hpp"
#include "dekg/theory.hpp"
#include "dekg/training.hpp"

using namespace dekg;

TEST_CASE("sine coefficients equal the closed-form DST-I inverse when L = |T|") {
  for (int n : {1, 2, 3, 5}) {
    const auto coeffs = sine_indicator_coefficients(n, n);
    for (int p = 1; p <= n; ++p) {
      for (int k = 1; k <= n; ++k) {
        const double closed = 2.0 / (n + 1) * std::sin(k * M_PI * p / (n + 1));
        CHECK(coeffs[p - 1][k - 1] == doctest::Approx(closed).epsilon(1e-12));
      }
      for (int q = 1; q <= n; ++q) {
        CHECK(std::abs(sine_indicator_value(coeffs[p - 1], n, q) - (p == q ? 1.0 : 0.0)) < 1e-6);
      }
    }
  }
}

TEST_CASE("longer blocks still interpolate the indicator") {
  const auto coeffs = sine_indicator_coefficients(3, 7);
  for (int p = 1; p <= 3; ++p) {
    for (int q = 1; q <= 3; ++q) {
      CHECK(std::abs(sine_indicator_value(coeffs[p - 1], 3, q) - (p == q ? 1.0 : 0.0)) < 1e-9);
    }
  }
}

TEST_CASE("short blocks make the solve singular") {
  try {
    sine_indicator_coefficients(3, 2);
    FAIL("expected construction error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Construction);
  }
}

TEST_CASE("single true fact scores +1") {
  const auto w = WorldSpec::from_bits(1, 1, 1, 1);
  const auto a = construct_expressive_params(w, 1);
  CHECK(a.dim == 2);
  CHECK(forward_component_score(a, 0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(score(a.params, Quadruple{0, 0, 0, theory_date(0), 0}) == doctest::Approx(1.0));
  const auto f = construct_expressive_params(WorldSpec::from_bits(1, 1, 1, 0), 1);
  CHECK(forward_component_score(f, 0, 0, 0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("every world over |V|=2, |R|=1, |T|=2 is signed correctly") {
  std::size_t failed = 0;
  for (std::uint64_t bits = 0; bits < 256; ++bits) {
    const auto rep = verify_expressivity(WorldSpec::from_bits(2, 1, 2, bits), 2);
    CHECK(rep.tuples == 8);
    failed += rep.passed() ? 0 : 1;
  }
  CHECK(failed == 0);
}

TEST_CASE("random worlds with three entities, two relations, three timestamps") {
  Rng rng(17);
  for (int i = 0; i < 10; ++i) {
    const auto w = WorldSpec::random(3, 2, 3, rng);
    const auto rep = verify_expressivity(w, 3);
    CHECK(rep.tuples == 54);
    CHECK(rep.passed());
    const auto a = construct_expressive_params(w, 3);
    CHECK(a.dim == 2 * 2 * 3 * 3 * 3);
    for (int t = 0; t < 3; ++t) {
      const double s = score(a.params, Quadruple{1, 1, 2, theory_date(t), t});
      CHECK(s == doctest::Approx(w.holds(1, 1, 2, t) ? 1.0 : -1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("world indexing and validation") {
  const auto w = WorldSpec::from_bits(2, 1, 2, 0b100);
  CHECK(w.holds(0, 0, 1, 0));
  CHECK_FALSE(w.holds(0, 0, 0, 0));
  CHECK(w.index(1, 0, 1, 1) == 7);
  WorldSpec bad{2, 1, 2, {1, 0}};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(construct_expressive_params(WorldSpec::from_bits(2, 2, 2, 0), 5000), Error);
}

namespace {

ModelParams tying_params(ModelKind k, bool nonneg, Rng& rng) {
  return random_tying_params(k, 8, 3, 6, 3,
                             Activation{nonneg ? ActivationKind::Sigmoid : ActivationKind::Sine},
                             nonneg, rng);
}

}  // namespace

TEST_CASE("tying schemes give exact identities") {
  Rng rng(23);
  for (auto k : {ModelKind::SimplE, ModelKind::DESimplE}) {
    const auto p = tying_params(k, false, rng);
    for (const auto& s : {TyingScheme::symmetric(1), TyingScheme::anti_symmetric(2),
                          TyingScheme::inverse(0, 2)}) {
      const auto tied = apply_tying(p, s);
      const auto rep = check_tying(tied, s, 2000, rng);
      CHECK(rep.checked == 2000);
      CHECK(rep.violations == 0);
      // the untied model generally breaks the identity
      CHECK(check_tying(p, s, 200, rng).violations > 0);
    }
  }
}

TEST_CASE("entailment tying under non-negativity") {
  Rng rng(29);
  const auto p = tying_params(ModelKind::DESimplE, true, rng);
  Vec df(6, 0.3), db(6, 0.0);
  db[2] = 1.0;
  const auto s = TyingScheme::entails(0, 1, df, db);
  const auto tied = apply_tying(p, s);
  CHECK(check_tying(tied, s, 2000, rng).violations == 0);

  auto kind_of = [&](const ModelParams& params, const TyingScheme& scheme) {
    try {
      apply_tying(params, scheme);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  Vec neg = df;
  neg[4] = -0.01;
  CHECK(kind_of(p, TyingScheme::entails(0, 1, neg, db)) == ErrorKind::Constraint);
  auto negative_amp = p;
  negative_amp.entity_table(1).row(3)[0] = -0.2;
  CHECK(kind_of(negative_amp, s) == ErrorKind::Constraint);
  const auto sine = random_tying_params(ModelKind::DESimplE, 4, 2, 6, 3, Activation{ActivationKind::Sine}, true, rng);
  CHECK(kind_of(sine, s) == ErrorKind::Constraint);
  CHECK(kind_of(p, TyingScheme::entails(0, 1, Vec(5, 0.1), db)) == ErrorKind::Dimension);
  ModelConfig c;
  c.kind = ModelKind::DistMult;
  c.dim = 6;
  CHECK(kind_of(ModelParams(c, 2, 2, 1), TyingScheme::symmetric(0)) == ErrorKind::InvalidArgument);
  CHECK(kind_of(p, TyingScheme::symmetric(9)) == ErrorKind::Index);
}
