#include <cmath>
#include <set>
#include <stdexcept>

#include "cqpolar/channel_io.hpp"
#include "cqpolar/code.hpp"
#include "cqpolar/errors.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"

using namespace cqpolar;

namespace {

CqChannel useless(int q) {
  std::vector<DensityMatrix> st(q, DensityMatrix::maximally_mixed(2));
  return channel_from_states(FiniteAbelianGroup({q}), st);
}

CqChannel perfect(int q) {
  std::vector<DensityMatrix> st;
  for (int x = 0; x < q; ++x) st.push_back(DensityMatrix::basis(q, x));
  return channel_from_states(FiniteAbelianGroup({q}), st);
}

CqChannel z4_homomorphism() {
  auto a = DensityMatrix::basis(2, 0), b = DensityMatrix::basis(2, 1);
  return channel_from_states(FiniteAbelianGroup({4}), {a, b, a, b});
}

CqChannel random_channel(const FiniteAbelianGroup& g, int k, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<DensityMatrix> st;
  for (int x = 0; x < g.order(); ++x) st.push_back(random_density(k, 1 + uniform_int(rng, k), rng));
  return channel_from_states(g, st);
}

// All u in G^N, first coordinate most significant.
std::vector<std::vector<Elem>> all_words(int q, int N) {
  std::vector<std::vector<Elem>> out;
  std::vector<Elem> u(N, 0);
  while (true) {
    out.push_back(u);
    int i = N - 1;
    while (i >= 0 && ++u[i] == q) u[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

// The channel u^t -> (B, u^r for r before t in `order`), by enumerating every
// message and running the encoder.
CqChannel induced_channel(const CqChannel& w, int N, std::size_t t, const std::vector<std::size_t>& order) {
  const auto& g = w.group();
  const int q = g.order();
  std::vector<std::size_t> before;
  for (std::size_t b : order) {
    if (b == t) break;
    before.push_back(b);
  }
  std::vector<Matrix> base;
  for (Elem x = 0; x < q; ++x) base.push_back(psd_factor(w.output(x).branches()[0].block()));
  const double scale = std::pow(double(q), -(N - 1));
  std::vector<std::vector<Branch>> br(q);
  int dim = 1;
  for (int i = 0; i < N; ++i) dim *= w.dim();
  for (const auto& u : all_words(q, N)) {
    auto x = encode(g, u);
    Matrix f = base[x[0]];
    for (int i = 1; i < N; ++i) f = kron(f, base[x[i]]);
    Label lab;
    for (std::size_t b : before) lab.push_back(u[b]);
    if (lab.empty()) lab.push_back(0);
    br[u[t]].push_back(Branch{lab, std::sqrt(scale) * f});
  }
  std::vector<HybridState> out;
  for (auto& v : br) out.emplace_back(dim, std::move(v));
  return CqChannel(g, dim, std::move(out));
}

// Largest disagreement in unitarily invariant quantities.
double channel_distance(const CqChannel& a, const CqChannel& b) {
  double d = std::abs(holevo_information(a) - holevo_information(b));
  auto pa = pairwise_fidelity(a), pb = pairwise_fidelity(b);
  for (std::size_t i = 0; i < pa.size(); ++i) d = std::max(d, std::abs(pa[i] - pb[i]));
  for (Elem x = 0; x < a.q(); ++x) d = std::max(d, std::abs(hybrid_entropy(a.output(x)) - hybrid_entropy(b.output(x))));
  return d;
}

std::vector<std::size_t> indices(const std::vector<BranchLabel>& v) {
  std::vector<std::size_t> out;
  for (const auto& b : v) out.push_back(b.index());
  return out;
}

}  // namespace

TEST_SUITE("code") {

TEST_CASE("useless channel freezes everything") {
  CodeParams p;
  p.n = 3;
  auto plan = build_plan(useless(3), p);
  for (const auto& b : plan.branches) CHECK(b.H.order() == 3);
  CHECK(plan.rate == 0.0);
  CHECK(std::abs(rate_gap(plan)) < 1e-12);
  CHECK(plan.bound == 0.0);
}

TEST_CASE("perfect binary channel uses every branch") {
  CodeParams p;
  p.n = 3;
  auto plan = build_plan(perfect(2), p);
  for (const auto& b : plan.branches) {
    CHECK(b.H.order() == 1);
    CHECK(b.in_E);
  }
  CHECK(std::abs(plan.rate - std::log(2.0)) < 1e-12);
  CHECK(std::abs(rate_gap(plan)) < 1e-12);
}

TEST_CASE("Z4 homomorphism channel picks {0,2} on every branch") {
  CodeParams p;
  p.n = 2;
  auto plan = build_plan(z4_homomorphism(), p);
  for (const auto& b : plan.branches) {
    CHECK(b.H.elements() == std::vector<Elem>{0, 2});
    CHECK(b.cosets() == 2);
  }
  CHECK(std::abs(plan.rate - std::log(2.0)) < 1e-9);
}

TEST_CASE("paper-strict threshold is 2^{-2^{beta' n}}") {
  CodeParams p;
  p.n = 4;
  p.beta_prime = 0.25;
  p.mode = PlanMode::PaperStrict;
  CHECK(p.threshold() == doctest::Approx(0.25));
  p.tau = 0.5;
  CHECK(p.threshold() == doctest::Approx(0.25));
  p.mode = PlanMode::BestEffort;
  CHECK(p.threshold() == 0.5);
}

TEST_CASE("parameter validation") {
  CodeParams p;
  p.beta = 0.3;
  p.beta_prime = 0.2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = CodeParams{};
  p.delta = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = CodeParams{};
  p.n = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("binary encoder, n = 1") {
  FiniteAbelianGroup g({2});
  CHECK(encode(g, {1, 1}) == std::vector<Elem>{0, 1});
  CHECK(encode(g, {1, 0}) == std::vector<Elem>{1, 0});
}

TEST_CASE("N = 4 encoder by hand") {
  FiniteAbelianGroup g({5});
  // u^{--}=a, u^{-+}=c, u^{+-}=b, u^{++}=d in decoding order
  const Elem a = 1, c = 2, b = 3, d = 4;
  auto x = encode(g, {a, c, b, d});
  CHECK(x == std::vector<Elem>{(a + b + c + d) % 5, (b + d) % 5, (c + d) % 5, d});
}

TEST_CASE("encoder agrees with the recursive oracle") {
  for (auto orders : {std::vector<int>{2}, std::vector<int>{3}, std::vector<int>{4}, std::vector<int>{2, 2}}) {
    FiniteAbelianGroup g(orders);
    Rng rng = make_rng(4, {static_cast<std::uint64_t>(g.order())});
    for (int n = 0; n <= 6; ++n)
      for (int t = 0; t < 20; ++t) {
        std::vector<Elem> u(1 << n);
        for (auto& x : u) x = uniform_int(rng, g.order());
        CHECK(encode(g, u) == oracle::encode_recursive(g, u));
      }
  }
}

TEST_CASE("operation counts") {
  FiniteAbelianGroup g({3});
  for (int n = 1; n <= 10; ++n) {
    const std::uint64_t N = 1u << n;
    EncodeStats st;
    encode(g, std::vector<Elem>(N, 1), &st);
    CHECK(st.node_evaluations == N * n);
    CHECK(st.additions == N * n / 2);
  }
}

TEST_CASE("encoder is a bijection of G^N for N <= 8, q <= 4") {
  for (auto orders : {std::vector<int>{2}, std::vector<int>{3}, std::vector<int>{4}, std::vector<int>{2, 2}}) {
    FiniteAbelianGroup g(orders);
    for (int N : {2, 4, 8}) {
      std::set<std::vector<Elem>> seen;
      const auto words = all_words(g.order(), N);
      for (const auto& u : words) seen.insert(encode(g, u));
      CHECK(seen.size() == words.size());
    }
  }
}

TEST_CASE("plan encoder is injective on the message space and linear for H_s = {0}") {
  CodeParams p;
  p.n = 3;
  p.sections = SectionMode::Zero;
  auto plan = build_plan(perfect(3), p);
  std::set<std::vector<Elem>> seen;
  const auto words = all_words(3, 8);
  for (const auto& u : words) seen.insert(encode(plan, MessageVector{u}));
  CHECK(seen.size() == words.size());
  CHECK(encode(plan, MessageVector{std::vector<int>(8, 0)}) == std::vector<Elem>(8, 0));
  Rng rng = make_rng(9);
  for (int t = 0; t < 50; ++t) {
    auto m1 = random_message(plan, rng), m2 = random_message(plan, rng);
    MessageVector s;
    for (int i = 0; i < 8; ++i) s.symbols.push_back((m1.symbols[i] + m2.symbols[i]) % 3);
    auto x1 = encode(plan, m1), x2 = encode(plan, m2), xs = encode(plan, s);
    for (int i = 0; i < 8; ++i) CHECK(xs[i] == (x1[i] + x2[i]) % 3);
  }
}

TEST_CASE("mixed-quotient plans stay injective for every section choice") {
  auto w = random_channel(FiniteAbelianGroup({2, 2}), 2, 17);
  CodeParams p;
  p.n = 2;
  p.tau = 0.9;
  p.delta = 0.69;
  auto plan = build_plan(w, p);
  Rng rng = make_rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<SectionMap> secs;
    for (const auto& b : plan.branches) secs.push_back(random_section_map(b.quotient, rng()));
    std::set<std::vector<Elem>> seen;
    std::size_t count = 0;
    std::vector<int> sym(plan.N(), 0);
    while (true) {
      seen.insert(encode(plan, MessageVector{sym}, secs));
      ++count;
      int i = plan.N() - 1;
      while (i >= 0 && ++sym[i] == plan.branches[i].cosets()) sym[i--] = 0;
      if (i < 0) break;
    }
    CHECK(seen.size() == count);
  }
}

TEST_CASE("message validation") {
  CodeParams p;
  p.n = 1;
  auto plan = build_plan(z4_homomorphism(), p);
  CHECK_THROWS_AS(encode(plan, MessageVector{{0}}), std::invalid_argument);
  CHECK_THROWS_AS(encode(plan, MessageVector{{0, 2}}), std::invalid_argument);
  CHECK_NOTHROW(encode(plan, MessageVector{{1, 1}}));
}

TEST_CASE("induced channels equal the synthesised channels in decoding order") {
  struct Case {
    std::vector<int> orders;
    int k, n;
  };
  for (const auto& c : {Case{{2}, 2, 1}, Case{{2}, 2, 2}, Case{{3}, 2, 2}, Case{{2, 2}, 2, 1}, Case{{4}, 2, 2}}) {
    auto w = random_channel(FiniteAbelianGroup(c.orders), c.k, 5);
    const int N = 1 << c.n;
    auto order = indices(branch_order(c.n));
    for (int t = 0; t < N; ++t) {
      auto s = BranchLabel::from_index(t, c.n);
      INFO("branch " << s.to_string());
      CHECK(channel_distance(induced_channel(w, N, t, order), synthesize(w, s)) < 1e-9);
    }
  }
}

TEST_CASE("the last-coordinate-major order breaks the equivalence at N = 4") {
  auto w = random_channel(FiniteAbelianGroup({2}), 2, 8);
  auto order = indices(last_major_order(2));
  double worst = 0.0;
  for (int t = 0; t < 4; ++t)
    worst = std::max(worst, channel_distance(induced_channel(w, 4, t, order), synthesize(w, BranchLabel::from_index(t, 2))));
  CHECK(worst > 1e-3);
}

TEST_CASE("plan JSON round trip") {
  auto w = random_channel(FiniteAbelianGroup({4}), 2, 21);
  CodeParams p;
  p.n = 2;
  p.tau = 0.5;
  p.seed = 77;
  auto plan = build_plan(w, p);
  auto j = plan_to_json(plan);
  auto back = plan_from_json(nlohmann::json::parse(j.dump()));
  CHECK(plan_to_json(back) == j);
  CHECK(back.channel == j["channel"]);
  auto bad = j;
  bad["branches"][0]["section"][0] = bad["branches"][0]["section"][1];
  if (plan.branches[0].cosets() > 1) CHECK_THROWS_AS(plan_from_json(bad), LoadError);
  bad = j;
  bad["branches"].erase(1);
  CHECK_THROWS_AS(plan_from_json(bad), LoadError);
}

TEST_CASE("section modes") {
  auto w = z4_homomorphism();
  CodeParams p;
  p.n = 2;
  p.sections = SectionMode::Zero;
  auto plan = build_plan(w, p);
  for (const auto& b : plan.branches) CHECK(b.section.table == std::vector<Elem>{0, 1});
  p.sections = SectionMode::Random;
  int differs = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    p.seed = seed;
    auto pr = build_plan(w, p);
    for (const auto& b : pr.branches) {
      CHECK(is_valid_section(b.quotient, b.section));
      differs += b.section.table != std::vector<Elem>{0, 1};
    }
  }
  CHECK(differs > 0);
}

TEST_CASE("rate gap of BSC(0.11) shrinks from n = 3 to n = 6") {
  PresetParams pp;
  pp.q = 2;
  pp.p = 0.11;
  auto w = make_preset("classical-symmetric", pp);
  CodeParams p;
  p.tau = 1e-2;
  p.delta = 0.1;
  double prev = INFINITY;
  for (int n = 3; n <= 6; ++n) {
    p.n = n;
    auto plan = build_plan(w, p);
    const double gap = rate_gap(plan);
    CHECK(gap < prev);
    CHECK(gap >= -1e-12);
    prev = gap;
  }
}

TEST_CASE("rate accounting: I(W) < R + delta when every branch is in E_n") {
  int tested = 0;
  for (auto w : {perfect(2), perfect(3), z4_homomorphism(), useless(2)}) {
    CodeParams p;
    p.n = 2;
    p.delta = 0.3;
    auto plan = build_plan(w, p);
    if (plan.fraction_in_E < 1.0) continue;
    ++tested;
    CHECK(plan.I_W < plan.rate + p.delta);
  }
  CHECK(tested == 4);
}

TEST_CASE("bound formula") {
  auto w = random_channel(FiniteAbelianGroup({3}), 2, 2);
  CodeParams p;
  p.n = 2;
  p.tau = 0.5;
  p.delta = 0.69;
  auto plan = build_plan(w, p);
  double s = 0.0;
  for (const auto& b : plan.branches) s += 2.0 * b.F_H;
  CHECK(plan.bound == doctest::Approx(2.0 * 2.0 * std::sqrt(s)));
  double r = 0.0;
  for (const auto& b : plan.branches) r += std::log(3.0 / b.H.order());
  CHECK(plan.rate == doctest::Approx(r / 4));
}

}
