#include <cmath>

#include "cqpolar/channel.hpp"
#include "cqpolar/channel_io.hpp"
#include "cqpolar/classical.hpp"
#include "cqpolar/errors.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"

using namespace cqpolar;

namespace {

CqChannel z4_homomorphism() {
  FiniteAbelianGroup g({4});
  auto a = DensityMatrix::basis(2, 0), b = DensityMatrix::basis(2, 1);
  return channel_from_states(g, {a, b, a, b});
}

CqChannel random_channel(const FiniteAbelianGroup& g, int k, Rng& rng) {
  std::vector<DensityMatrix> st;
  for (int x = 0; x < g.order(); ++x) st.push_back(random_density(k, 1 + uniform_int(rng, k), rng));
  return channel_from_states(g, st);
}

double h2(double p) { return -p * std::log(p) - (1 - p) * std::log(1 - p); }

}  // namespace

TEST_SUITE("channel") {

TEST_CASE("holevo examples") {
  PresetParams p;
  p.angles = {0.0, M_PI / 2};
  CHECK(holevo_information(make_preset("pure-states", p)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  FiniteAbelianGroup z2({2});
  auto mm = DensityMatrix::maximally_mixed(2);
  CHECK(holevo_information(channel_from_states(z2, {mm, mm})) == doctest::Approx(0.0).epsilon(1e-12));
  p.angles = {0.0, M_PI / 3};  // overlap 0.5
  auto w = make_preset("pure-states", p);
  CHECK(holevo_information(w) == doctest::Approx(h2(0.75)).epsilon(1e-12));
  CHECK(holevo_information(w) == doctest::Approx(0.562335).epsilon(1e-6));
}

TEST_CASE("F_d, F and F_max examples") {
  PresetParams p;
  p.angles = {0.0, M_PI / 2};
  auto perfect = make_preset("pure-states", p);
  CHECK(fd(perfect, 1) == doctest::Approx(0.0));
  CHECK(avg_fidelity(perfect) == doctest::Approx(0.0));
  CHECK(f_max(perfect) == doctest::Approx(0.0));
  FiniteAbelianGroup z3({3});
  auto mm = DensityMatrix::maximally_mixed(2);
  auto useless = channel_from_states(z3, {mm, mm, mm});
  for (Elem d = 0; d < 3; ++d) CHECK(fd(useless, d) == doctest::Approx(1.0));
  auto w = z4_homomorphism();
  auto t = fd_table(w);
  CHECK(t.values[0] == 1.0);
  CHECK(t.values[2] == doctest::Approx(1.0));
  CHECK(t.values[1] == doctest::Approx(0.0));
  CHECK(t.values[3] == doctest::Approx(0.0));
  CHECK(avg_fidelity(t) == doctest::Approx(1.0 / 3));
  CHECK(f_max(t) == doctest::Approx(1.0));
  CqChannel single(FiniteAbelianGroup({1}), 2, {HybridState::single(mm)});
  CHECK(avg_fidelity(single) == 0.0);
}

TEST_CASE("F <= Fmax <= (q-1)F on random channels") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    FiniteAbelianGroup g({2 + t % 4});
    auto w = random_channel(g, 2 + t % 2, rng);
    auto tab = fd_table(w);
    CHECK(avg_fidelity(tab) <= f_max(tab) + 1e-12);
    CHECK(f_max(tab) <= (g.order() - 1) * avg_fidelity(tab) + 1e-12);
    double i = holevo_information(w);
    CHECK(i >= -1e-12);
    CHECK(i <= std::log(g.order()) + 1e-12);
  }
}

TEST_CASE("quotient channels") {
  auto w = z4_homomorphism();
  const auto& g = w.group();
  auto w0 = quotient_channel(w, trivial_subgroup(g));
  CHECK(holevo_information(w0) == doctest::Approx(holevo_information(w)));
  auto wg = quotient_channel(w, full_subgroup(g));
  CHECK(wg.q() == 1);
  CHECK(holevo_information(wg) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(avg_fidelity(wg) == 0.0);
  Subgroup h(g, {0, 2});
  auto wh = quotient_channel(w, h);
  CHECK(holevo_information(wh) == doctest::Approx(std::log(2.0)));
  CHECK(avg_fidelity(wh) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(quotient_channel(w, trivial_subgroup(FiniteAbelianGroup({2, 2}))), StructuralError);
}

TEST_CASE("restricted quotient channels") {
  auto w = z4_homomorphism();
  const auto& g = w.group();
  auto all = quotient_cosets(full_subgroup(g));
  auto r = restricted_quotient_channel(w, trivial_subgroup(g), full_subgroup(g), all[0]);
  CHECK(holevo_information(r) == doctest::Approx(holevo_information(w)));
  Subgroup h(g, {0, 2});
  auto r2 = restricted_quotient_channel(w, h, full_subgroup(g), all[0]);
  CHECK(holevo_information(r2) == doctest::Approx(std::log(2.0)));
  CHECK(avg_fidelity(r2) == doctest::Approx(0.0).epsilon(1e-12));
  auto cos = quotient_cosets(h);
  auto r3 = restricted_quotient_channel(w, h, h, cos[1]);
  CHECK(r3.q() == 1);
  CHECK(avg_fidelity(r3) == 0.0);
  CHECK_THROWS_AS(restricted_quotient_channel(w, full_subgroup(g), h, cos[0]), StructuralError);
}

TEST_CASE("nested information and its decomposition") {
  auto w = z4_homomorphism();
  const auto& g = w.group();
  Subgroup m(g, {0, 2});
  auto ni = nested_information(w, m, full_subgroup(g));
  CHECK(ni.value == doctest::Approx(std::log(2.0)));
  CHECK(nested_information(w, m, m).value == doctest::Approx(0.0));
  Rng rng(8);
  for (auto orders : std::vector<std::vector<int>>{{4}, {2, 2}, {6}}) {
    FiniteAbelianGroup gg(orders);
    auto subs = enumerate_subgroups(gg);
    for (int t = 0; t < 10; ++t) {
      auto c = random_channel(gg, 2, rng);
      for (auto& hh : subs)
        for (auto& mm : subgroups_within(hh)) {
          auto v = nested_information(c, mm, hh);
          CHECK(std::abs(v.value - v.decomposition) < 1e-9);
          CHECK(v.value >= -1e-12);
          CHECK(v.value <= std::log(static_cast<double>(hh.order() / mm.order())) + 1e-12);
        }
    }
  }
}

TEST_CASE("hybrid and flattened channels agree") {
  Rng rng(13);
  FiniteAbelianGroup g({3});
  for (int t = 0; t < 20; ++t) {
    std::vector<HybridState> out;
    for (int x = 0; x < 3; ++x) {
      std::vector<Branch> br;
      double tot = 0;
      std::vector<double> w(3);
      for (auto& v : w) tot += (v = uniform01(rng) + 0.05);
      for (int l = 0; l < 3; ++l) {
        if (t % 2 && l == x) continue;  // some labels absent
        auto rho = random_density(2, 1 + (l + t) % 2, rng);
        br.push_back(Branch{{l}, psd_factor(rho.matrix()) * std::sqrt(w[l] / tot)});
      }
      out.emplace_back(2, std::move(br));
    }
    // renormalise where a label was dropped
    for (auto& o : out) {
      double s = o.total_weight();
      std::vector<Branch> br = o.branches();
      for (auto& b : br) b.factor /= std::sqrt(s);
      o = HybridState(2, br);
    }
    CqChannel w(g, 2, out);
    auto f = flatten(w);
    auto d = oracle::dense_of(w);
    CHECK(std::abs(holevo_information(w) - holevo_information(f)) < 1e-9);
    CHECK(std::abs(holevo_information(w) - oracle::dense_info(d)) < 1e-9);
    for (Elem x = 0; x < 3; ++x) {
      CHECK(std::abs(fd(w, x) - fd(f, x)) < 1e-9);
      CHECK(std::abs(fd(w, x) - oracle::dense_fd(d, x)) < 1e-7);
    }
    CHECK(std::abs(avg_fidelity(w) - avg_fidelity(f)) < 1e-9);
  }
}

TEST_CASE("diagonal channels match classical formulas") {
  PresetParams p;
  p.q = 2;
  p.p = 0.11;
  auto bsc = make_preset("classical-symmetric", p);
  CHECK(std::abs(holevo_information(bsc) - (std::log(2.0) - h2(0.11))) < 1e-10);
  CHECK(std::abs(holevo_information(bsc) - 0.346632) < 1e-6);
  CHECK(std::abs(avg_fidelity(bsc) - 2 * std::sqrt(0.11 * 0.89)) < 1e-10);
  CHECK(std::abs(avg_fidelity(bsc) - 0.625780) < 1e-6);
  Rng rng(17);
  for (int t = 0; t < 40; ++t) {
    FiniteAbelianGroup g({2 + t % 3});
    const int k = 2 + t % 3;
    std::vector<DensityMatrix> st;
    for (int x = 0; x < g.order(); ++x) {
      Matrix m = Matrix::Zero(k, k);
      double s = 0;
      for (int i = 0; i < k; ++i) s += (m(i, i) = (uniform01(rng) < 0.2 ? 0.0 : uniform01(rng))).real();
      if (s == 0) m(0, 0) = s = 1;
      st.push_back(DensityMatrix::from(m / s));
    }
    auto w = channel_from_states(g, st);
    REQUIRE(w.is_diagonal());
    auto pc = oracle::prob_of_diagonal(w);
    CHECK(std::abs(holevo_information(w) - oracle::prob_info(pc)) < 1e-10);
    auto cc = ClassicalChannel::from_cq(w);
    CHECK(std::abs(holevo_information(cc) - oracle::prob_info(pc)) < 1e-10);
    for (Elem d = 0; d < g.order(); ++d) {
      CHECK(std::abs(fd(w, d) - oracle::prob_fd(pc, d)) < 1e-10);
      CHECK(std::abs(fd_table(cc).values[d] - oracle::prob_fd(pc, d)) < 1e-10);
    }
  }
}

TEST_CASE("presets") {
  PresetParams p;
  p.angles = {0.0, M_PI / 2};
  auto w = make_preset("pure-states", p);
  CHECK(avg_fidelity(w) == doctest::Approx(0.0).epsilon(1e-12));
  p.q = 2;
  p.k = 2;
  p.seed = 7;
  auto r = make_preset("random", p);
  CHECK(r.q() == 2);
  CHECK(r.dim() == 2);
  for (const auto& o : r.outputs()) CHECK(o.total_weight() == doctest::Approx(1.0));
  auto r2 = make_preset("random", p);
  CHECK(holevo_information(r) == holevo_information(r2));
  p.q = 3;
  p.lambda = 1.0;
  CHECK(holevo_information(make_preset("depolarized-orthogonal", p)) == doctest::Approx(0.0).epsilon(1e-12));
  p.lambda = 0.0;
  CHECK(holevo_information(make_preset("depolarized-orthogonal", p)) == doctest::Approx(std::log(3.0)));
  p.eps = 0.3;
  CHECK(holevo_information(make_preset("erasure", p)) == doctest::Approx(0.7 * std::log(3.0)));
  CHECK_THROWS_AS(make_preset("nope", p), LoadError);
}

TEST_CASE("JSON loading") {
  using nlohmann::json;
  json good = {{"group", {2}}, {"k", 2},
               {"states", {{"(0)", {{"re", {{1, 0}, {0, 0}}}, {"im", {{0, 0}, {0, 0}}}}},
                           {"(1)", {{"branches", {{{"w", 0.5}, {"label", "a"}, {"re", {{0, 0}, {0, 1}}}},
                                                  {{"w", 0.5}, {"label", "b"}, {"re", {{0.5, 0.5}, {0.5, 0.5}}}}}}}}}}};
  auto w = load_channel(good);
  CHECK(w.q() == 2);
  CHECK(w.output(1).branches().size() == 2);
  auto rt = load_channel(channel_to_json(w));
  CHECK(holevo_information(rt) == doctest::Approx(holevo_information(w)).epsilon(1e-12));

  json bad = good;
  bad["states"]["(1)"] = {{"re", {{1.5, 0}, {0, -0.5}}}};
  try {
    load_channel(bad);
    FAIL("expected a load error");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("(1)") != std::string::npos);
  }
  json missing = good;
  missing["states"].erase("(1)");
  CHECK_THROWS_AS(load_channel(missing), LoadError);
  json trace = good;
  trace["states"]["(0)"] = {{"re", {{0.5, 0}, {0, 0.4}}}};
  CHECK_THROWS_AS(load_channel(trace), LoadError);
  json weights = good;
  weights["states"]["(1)"]["branches"][0]["w"] = 0.7;
  CHECK_THROWS_AS(load_channel(weights), LoadError);
  json key = good;
  key["states"]["(2)"] = key["states"]["(0)"];
  CHECK_THROWS_AS(load_channel(key), LoadError);
}

}
