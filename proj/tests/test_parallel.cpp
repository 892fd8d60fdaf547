#include <doctest.h>

#include "test_util.hpp"
#include "tvlab/independence.hpp"
#include "tvlab/io.hpp"
#include "tvlab/runtime.hpp"

using namespace tvlab;
using tvlab::test::ball_family;

// The OpenMP kernels must reproduce the serial reference bit for bit: every
// parallel site uses per-index seeding and an index-ordered reduction.

namespace {

Family probe_family() {
  Rng rng(12345);
  std::vector<std::pair<Vec, double>> balls;
  for (int i = 0; i < 6; ++i)
    balls.push_back({{rng.uniform(-8.0, 8.0), rng.uniform(-8.0, 8.0)}, rng.uniform(0.2, 1.5)});
  return ball_family(std::move(balls));
}

}  // namespace

TEST_CASE("solver results are identical in serial and parallel mode") {
  const Family f = probe_family();
  SolveOptions opts;
  opts.seed = 99;

  FlatFit par_fit, ser_fit;
  {
    par_fit = min_max_flat(f, 1, opts);
  }
  {
    SerialGuard guard;
    ser_fit = min_max_flat(f, 1, opts);
  }
  CHECK(par_fit.signed_value == ser_fit.signed_value);
  CHECK(par_fit.flat.anchor == ser_fit.flat.anchor);
  REQUIRE(par_fit.flat.basis.size() == ser_fit.flat.basis.size());
  for (size_t i = 0; i < par_fit.flat.basis.size(); ++i)
    CHECK(par_fit.flat.basis[i] == ser_fit.flat.basis[i]);
}

TEST_CASE("grid oracle reduction is order-independent") {
  const Family f = probe_family();
  SolveOptions opts;
  opts.grid_step = 0.05;
  const FlatFit par_fit = grid_oracle(f, 1, opts);
  SerialGuard guard;
  const FlatFit ser_fit = grid_oracle(f, 1, opts);
  CHECK(par_fit.signed_value == ser_fit.signed_value);
  CHECK(par_fit.flat.anchor == ser_fit.flat.anchor);
}

TEST_CASE("claim trials reduce deterministically") {
  const ClaimReport par_rep = verify_claim_ktok(3.0, 500, 7);
  SerialGuard guard;
  const ClaimReport ser_rep = verify_claim_ktok(3.0, 500, 7);
  CHECK(par_rep.violations == ser_rep.violations);
  CHECK(par_rep.max_observed == ser_rep.max_observed);
}

TEST_CASE("independence evidence is identical across modes") {
  const Family f = counterexample_discs(6, /*closed=*/true);
  SolveOptions opts;
  const GreedySubsequenceResult par_res = greedy_independent_subsequence(f, 1, 3, opts);
  SerialGuard guard;
  const GreedySubsequenceResult ser_res = greedy_independent_subsequence(f, 1, 3, opts);
  CHECK(par_res.accepted == ser_res.accepted);
  REQUIRE(par_res.witness.evidence.size() == ser_res.witness.evidence.size());
  for (size_t i = 0; i < par_res.witness.evidence.size(); ++i)
    CHECK(par_res.witness.evidence[i].best_value == ser_res.witness.evidence[i].best_value);
}

TEST_CASE("documents are byte-identical across thread modes") {
  const Family f = probe_family();
  const FamilyDocument doc = make_document(f);
  SolveOptions opts;
  opts.seed = 7;
  const PierceResult par_res = pierce_with_m_flats(f, 1, 2, opts);
  std::string par_text, ser_text;
  if (par_res.success)
    par_text = dump_document(to_json(make_transversal_certificate(doc, par_res.cert, opts)));
  {
    SerialGuard guard;
    const PierceResult ser_res = pierce_with_m_flats(f, 1, 2, opts);
    if (ser_res.success)
      ser_text = dump_document(to_json(make_transversal_certificate(doc, ser_res.cert, opts)));
  }
  CHECK(par_text == ser_text);
  CHECK_FALSE(par_text.empty());
}
