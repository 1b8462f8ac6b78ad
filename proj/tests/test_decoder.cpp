#include <cmath>
#include <stdexcept>

#include "cqpolar/channel_io.hpp"
#include "cqpolar/decoder.hpp"
#include "cqpolar/errors.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"

using namespace cqpolar;

namespace {

CqChannel pure_pair(double overlap) {
  Vector a(2), b(2);
  a << 1.0, 0.0;
  b << overlap, std::sqrt(1.0 - overlap * overlap);
  return channel_from_states(FiniteAbelianGroup({2}), {DensityMatrix::pure(a), DensityMatrix::pure(b)});
}

CqChannel perfect(int q) {
  std::vector<DensityMatrix> st;
  for (int x = 0; x < q; ++x) st.push_back(DensityMatrix::basis(q, x));
  return channel_from_states(FiniteAbelianGroup({q}), st);
}

CqChannel useless(int q) {
  std::vector<DensityMatrix> st(q, DensityMatrix::maximally_mixed(2));
  return channel_from_states(FiniteAbelianGroup({q}), st);
}

CqChannel random_channel(const FiniteAbelianGroup& g, int k, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<DensityMatrix> st;
  for (int x = 0; x < g.order(); ++x) st.push_back(random_density(k, 1 + uniform_int(rng, k), rng));
  return channel_from_states(g, st);
}

CqChannel symmetric(int q, double p) {
  PresetParams pp;
  pp.q = q;
  pp.p = p;
  return make_preset("classical-symmetric", pp);
}

CodePlan make_plan(const CqChannel& w, int n, double tau, double delta = 0.69) {
  CodeParams p;
  p.n = n;
  p.tau = tau;
  p.delta = delta;
  return build_plan(w, p);
}

std::vector<SectionMap> random_sections(const CodePlan& plan, Rng& rng) {
  std::vector<SectionMap> s;
  for (const auto& b : plan.branches) s.push_back(random_section_map(b.quotient, rng()));
  return s;
}

// Weighted conditional output states of step pos, built by enumeration.
std::vector<Matrix> conditional_states(const CqChannel& w, const CodePlan& plan, std::size_t pos,
                                       const std::vector<Elem>& prefix) {
  auto dense = oracle::dense_of(w);
  const int q = w.q(), N = plan.N();
  const auto& bp = plan.branches[pos];
  int dim = 1;
  for (int i = 0; i < N; ++i) dim *= static_cast<int>(dense.rho[0].rows());
  std::vector<Matrix> out(bp.cosets(), Matrix::Zero(dim, dim));
  std::vector<Elem> u(prefix);
  u.resize(N, 0);
  const std::size_t free = N - pos;
  std::vector<Elem> t(free, 0);
  while (true) {
    std::copy(t.begin(), t.end(), u.begin() + pos);
    auto x = oracle::encode_recursive(w.group(), u);
    Matrix k = dense.rho[x[0]];
    for (int i = 1; i < N; ++i) k = kron(k, dense.rho[x[i]]);
    out[bp.quotient.coset_of[u[pos]]] += k / std::pow(double(q), double(free));
    std::size_t i = free;
    while (i > 0 && ++t[i - 1] == q) t[--i] = 0;
    if (i == 0) break;
  }
  return out;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("step measurements equal the dense PGM of the enumerated conditional states") {
  struct Case {
    CqChannel w;
    int n;
    double tau;
  };
  // pure states take the thin route, rank-2 states the dense one
  for (const auto& c : {Case{pure_pair(0.6), 2, 0.9}, Case{random_channel(FiniteAbelianGroup({3}), 2, 4), 2, 0.9},
                        Case{random_channel(FiniteAbelianGroup({2, 2}), 2, 9), 1, 0.9},
                        Case{random_channel(FiniteAbelianGroup({4}), 2, 12), 2, 0.9}}) {
    auto plan = make_plan(c.w, c.n, c.tau);
    ScDecoder dec(c.w, plan);
    Rng rng = make_rng(1);
    for (int pos = 0; pos < plan.N(); ++pos) {
      std::vector<Elem> prefix;
      for (int i = 0; i < pos; ++i) prefix.push_back(uniform_int(rng, c.w.q()));
      auto p = dec.step_povm(pos, prefix);
      CHECK_NOTHROW(validate_povm(p));
      if (plan.branches[pos].frozen()) {
        CHECK(p.effects.size() == 1);
        continue;
      }
      auto ref = pgm_from_weighted(conditional_states(c.w, plan, pos, prefix));
      REQUIRE(ref.effects.size() == p.effects.size());
      for (std::size_t e = 0; e < p.effects.size(); ++e) CHECK((p.effects[e] - ref.effects[e]).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("exact step error equals the PGM error of the synthetic quotient channel and meets its bound") {
  for (auto w : {pure_pair(0.5), random_channel(FiniteAbelianGroup({3}), 2, 6)}) {
    auto plan = make_plan(w, 2, 0.9);
    ScDecoder dec(w, plan);
    for (int pos = 0; pos < plan.N(); ++pos) {
      const auto& b = plan.branches[pos];
      const double e = dec.exact_step_error(pos);
      if (b.frozen()) {
        CHECK(e == 0.0);
        continue;
      }
      auto ws = flatten(quotient_channel(synthesize(w, b.branch), b.H));
      std::vector<Matrix> weighted;
      for (Elem c = 0; c < ws.q(); ++c) weighted.push_back(ws.output(c).branches()[0].block() / double(ws.q()));
      CHECK(std::abs(e - povm_error(pgm_from_weighted(weighted), weighted)) < 1e-9);
      CHECK(e <= (b.cosets() - 1) * b.F_H + 1e-12);
    }
  }
}

TEST_CASE("overlap-0.5 pair at N = 2: step error against (q-1) F on both branches") {
  auto w = pure_pair(0.5);
  auto plan = make_plan(w, 1, 0.9);
  ScDecoder dec(w, plan);
  for (int pos = 0; pos < 2; ++pos) {
    REQUIRE(plan.branches[pos].H.order() == 1);
    const double F = avg_fidelity(synthesize(w, plan.branches[pos].branch));
    CHECK(plan.branches[pos].F_H == doctest::Approx(F).epsilon(1e-12));
    CHECK(dec.exact_step_error(pos) <= F + 1e-12);
  }
  // F(W^+) = 0.25 for overlap 0.5
  CHECK(plan.branches[1].F_H == doctest::Approx(0.25));
}

TEST_CASE("noiseless orthogonal channel decodes exactly") {
  auto w = perfect(3);
  auto plan = make_plan(w, 2, 1e-3);
  ScDecoder dec(w, plan);
  Rng rng = make_rng(2);
  for (int t = 0; t < 20; ++t) {
    auto secs = random_sections(plan, rng);
    auto m = random_message(plan, rng);
    auto u = lift(plan, m, secs);
    auto psi = dec.sample_output(encode(plan.group, u), rng);
    auto tr = dec.decode(psi, secs, rng(), &u);
    CHECK(tr.estimate.symbols == m.symbols);
    for (const auto& s : tr.steps) CHECK(s.prob == doctest::Approx(1.0));
    CHECK(tr.true_survival == doctest::Approx(1.0));
  }
  ExperimentOptions o;
  o.trials = 50;
  CHECK(error_experiment(w, plan, o).errors == 0);
}

TEST_CASE("all-frozen plan returns the frozen message") {
  auto w = useless(2);
  auto plan = make_plan(w, 2, 1e-3);
  for (const auto& b : plan.branches) REQUIRE(b.frozen());
  ExperimentOptions o;
  o.trials = 30;
  o.path = DecoderPath::Quantum;
  auto r = error_experiment(w, plan, o);
  CHECK(r.errors == 0);
  CHECK(r.bound == 0.0);
}

TEST_CASE("forcing an impossible outcome flags a collapse") {
  auto w = perfect(2);
  auto plan = make_plan(w, 1, 1e-3);
  ScDecoder dec(w, plan);
  auto secs = plan.sections();
  auto psi = dec.basis_output({0, 0});
  std::vector<int> forced{1, 0};
  auto tr = dec.decode(psi, secs, 0, nullptr, &forced);
  CHECK(tr.collapsed);
  CHECK(tr.steps.back().survival < 1e-300);
}

TEST_CASE("quantum and classical decoders agree step by step on diagonal channels") {
  for (auto w : {symmetric(2, 0.11), symmetric(3, 0.2), symmetric(4, 0.15)}) {
    for (int n : {1, 2, 3}) {
      if (w.q() > 2 && n == 3) continue;  // q^8 joint dimension is past the cap
      auto plan = make_plan(w, n, 0.5);
      ScDecoder qd(w, plan);
      ClassicalScDecoder cd(w, plan);
      auto prob = oracle::prob_of_diagonal(w);
      Rng rng = make_rng(3, {static_cast<std::uint64_t>(w.q()), static_cast<std::uint64_t>(n)});
      for (int t = 0; t < 6; ++t) {
        auto secs = random_sections(plan, rng);
        auto m = random_message(plan, rng);
        auto u = lift(plan, m, secs);
        auto y = cd.sample_output(encode(plan.group, u), rng);
        std::vector<int> forced;
        for (const auto& b : plan.branches) forced.push_back(uniform_int(rng, b.cosets()));
        auto a = qd.decode(qd.basis_output(y), secs, 0, &u, &forced);
        auto c = cd.decode(y, secs, 0, &u, &forced);
        REQUIRE(a.steps.size() == c.steps.size());
        std::vector<Elem> prefix;
        for (std::size_t i = 0; i < a.steps.size(); ++i) {
          CHECK(max_diff(a.steps[i].dist, c.steps[i].dist) < 1e-10);
          const auto& b = plan.branches[i];
          auto ref = oracle::sc_posterior(prob, b.quotient.coset_of, b.cosets(), prefix, plan.N(), y);
          CHECK(max_diff(c.steps[i].dist, ref) < 1e-10);
          CHECK(a.steps[i].element == c.steps[i].element);
          prefix.push_back(c.steps[i].element);
        }
        CHECK(max_diff(a.true_step_error, c.true_step_error) < 1e-10);
        CHECK(std::abs(a.true_survival - c.true_survival) < 1e-10);
      }
    }
  }
}

TEST_CASE("classical decoder matches the brute-force posterior at N = 16") {
  auto w = symmetric(2, 0.11);
  auto plan = make_plan(w, 4, 0.2);
  ClassicalScDecoder cd(w, plan);
  auto prob = oracle::prob_of_diagonal(w);
  Rng rng = make_rng(8);
  auto secs = random_sections(plan, rng);
  auto u = lift(plan, random_message(plan, rng), secs);
  auto y = cd.sample_output(encode(plan.group, u), rng);
  auto tr = cd.decode(y, secs, 5);
  std::vector<Elem> prefix;
  for (int i = 0; i < plan.N(); ++i) {
    const auto& b = plan.branches[i];
    auto ref = oracle::sc_posterior(prob, b.quotient.coset_of, b.cosets(), prefix, plan.N(), y);
    CHECK(max_diff(tr.steps[i].dist, ref) < 1e-10);
    prefix.push_back(tr.steps[i].element);
  }
}

TEST_CASE("overlap-0.5 pair, N = 2, 2000 trials: block error within bound + 3 sigma") {
  auto w = pure_pair(0.5);
  auto plan = make_plan(w, 1, 0.9);
  ExperimentOptions o;
  o.trials = 2000;
  o.seed = 42;
  auto r = error_experiment(w, plan, o);
  CHECK(r.path == "quantum");
  CHECK(r.error_rate <= r.bound + 3 * r.sigma);
  CHECK(r.union_bound_violations == 0);
  CHECK(r.collapses == 0);
  for (int i = 0; i < 2; ++i) CHECK(r.step_error[i] <= r.step_bound[i] + 3 * std::sqrt(r.step_bound[i] / 2000) + 1e-12);
}

TEST_CASE("parallel and serial experiments agree and repeat") {
  auto w = random_channel(FiniteAbelianGroup({2}), 2, 31);
  auto plan = make_plan(w, 2, 0.9);
  ExperimentOptions o;
  o.trials = 300;
  o.seed = 7;
  auto a = error_experiment(w, plan, o), b = error_experiment_serial(w, plan, o), c = error_experiment(w, plan, o);
  CHECK(experiment_to_json(a, plan) == experiment_to_json(b, plan));
  CHECK(experiment_to_json(a, plan) == experiment_to_json(c, plan));
  CHECK(a.union_bound_violations == 0);
  o.seed = 8;
  CHECK(experiment_to_json(error_experiment(w, plan, o), plan) != experiment_to_json(a, plan));
}

TEST_CASE("BSC(0.11), N = 8, rate one half: quantum decoder within CI of the classical one") {
  auto w = symmetric(2, 0.11);
  CodePlan plan;
  bool found = false;
  for (double tau : {0.5, 0.4, 0.3, 0.25, 0.2, 0.15, 0.1, 0.05}) {
    plan = make_plan(w, 3, tau);
    int info = 0;
    for (const auto& b : plan.branches) info += !b.frozen();
    if (info == 4) {
      found = true;
      break;
    }
  }
  REQUIRE(found);
  CHECK(plan.rate == doctest::Approx(std::log(2.0) / 2));
  ExperimentOptions o;
  o.trials = 2000;
  o.seed = 11;
  o.path = DecoderPath::Classical;
  auto c = error_experiment(w, plan, o);
  o.path = DecoderPath::Quantum;
  o.seed = 12;
  auto q = error_experiment(w, plan, o);
  CHECK(c.path == "classical");
  CHECK(q.path == "quantum");
  INFO("classical " << c.error_rate << " quantum " << q.error_rate);
  CHECK(std::abs(c.error_rate - q.error_rate) <= 3 * std::hypot(c.sigma, q.sigma));
  CHECK(c.error_rate <= c.bound + 3 * c.sigma);
}

TEST_CASE("Wilson interval") {
  auto i = wilson_interval(0, 100, 1.96);
  CHECK(i.low == 0.0);
  CHECK(i.high == doctest::Approx(0.037).epsilon(0.01));
  auto j = wilson_interval(50, 100, 1.0);
  CHECK(j.low == doctest::Approx(0.5 - wilson_sigma(50, 100)));
  CHECK(wilson_sigma(0, 2000) > 0);
}

TEST_CASE("resource ceiling and input errors") {
  auto w = random_channel(FiniteAbelianGroup({2}), 2, 1);
  auto plan = make_plan(w, 2, 0.5);
  Caps small;
  small.dim_cap = 8;
  CHECK_THROWS_AS(ScDecoder(w, plan, small), CapacityError);
  ScDecoder dec(w, plan);
  CHECK_THROWS_AS(dec.decode(Vector::Zero(4), plan.sections(), 0), std::invalid_argument);
  CHECK_THROWS_AS(dec.step_povm(1, {}), std::invalid_argument);
  CHECK_THROWS_AS(ClassicalScDecoder(w, plan), StructuralError);
  CHECK_THROWS_AS(ScDecoder(perfect(3), plan), StructuralError);
}

}
