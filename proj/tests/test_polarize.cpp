#include <cmath>

#include "cqpolar/channel_io.hpp"
#include "cqpolar/errors.hpp"
#include "cqpolar/polarize.hpp"
#include "doctest.h"
#include "oracles/oracles.hpp"

using namespace cqpolar;

namespace {

CqChannel random_channel(const FiniteAbelianGroup& g, int k, Rng& rng) {
  std::vector<DensityMatrix> st;
  for (int x = 0; x < g.order(); ++x) st.push_back(random_density(k, 1 + uniform_int(rng, k), rng));
  return channel_from_states(g, st);
}

CqChannel z4_homomorphism() {
  auto a = DensityMatrix::basis(2, 0), b = DensityMatrix::basis(2, 1);
  return channel_from_states(FiniteAbelianGroup({4}), {a, b, a, b});
}

CqChannel bsc(double p) {
  PresetParams pp;
  pp.q = 2;
  pp.p = p;
  return make_preset("classical-symmetric", pp);
}

std::string labels(const std::vector<BranchLabel>& v) {
  std::string s;
  for (auto& b : v) s += b.to_string() + " ";
  return s;
}

}  // namespace

TEST_SUITE("polarize") {

TEST_CASE("branch orders") {
  CHECK(labels(branch_order(1)) == "- + ");
  CHECK(labels(branch_order(2)) == "-- -+ +- ++ ");
  CHECK(labels(last_major_order(2)) == "-- +- -+ ++ ");
  auto o = branch_order(4);
  CHECK(o.back().to_string() == "++++");
  for (std::size_t i = 0; i < o.size(); ++i) CHECK(o[i].index() == i);
  CHECK(BranchLabel::parse("(-,+,+)").to_string() == "-++");
}

TEST_CASE("transform examples") {
  FiniteAbelianGroup z2({2});
  auto mm = DensityMatrix::maximally_mixed(2);
  auto useless = channel_from_states(z2, {mm, mm});
  CHECK(holevo_information(minus_transform(useless)) == doctest::Approx(0.0).epsilon(1e-12));
  PresetParams p;
  p.q = 2;
  p.p = 0.0;
  auto perfect = make_preset("classical-symmetric", p);
  CHECK(holevo_information(minus_transform(perfect)) == doctest::Approx(std::log(2.0)));
  CHECK(holevo_information(plus_transform(perfect)) == doctest::Approx(std::log(2.0)));
  auto w = bsc(0.11);
  auto wm = minus_transform(w), wp = plus_transform(w);
  CHECK(std::abs(holevo_information(wm) - (2 * holevo_information(w) - holevo_information(wp))) < 1e-12);
  auto o = oracle::prob_of_diagonal(w);
  CHECK(std::abs(holevo_information(wm) - oracle::prob_info(oracle::prob_minus(o))) < 1e-12);
  CHECK(std::abs(holevo_information(wp) - oracle::prob_info(oracle::prob_plus(o))) < 1e-12);
}

TEST_CASE("hybrid transforms against expanded-register oracle") {
  Rng rng(23);
  for (int t = 0; t < 24; ++t) {
    FiniteAbelianGroup g(t % 3 == 2 ? std::vector<int>{2, 2} : std::vector<int>{2 + t % 2});
    auto w = random_channel(g, 2, rng);
    auto d = oracle::dense_of(w);
    auto cm = minus_transform(w), cp = plus_transform(w);
    auto dm = oracle::dense_minus(d), dp = oracle::dense_plus(d);
    CHECK(std::abs(holevo_information(cm) - oracle::dense_info(dm)) < 1e-9);
    CHECK(std::abs(holevo_information(cp) - oracle::dense_info(dp)) < 1e-9);
    for (Elem x = 0; x < g.order(); ++x) {
      CHECK(std::abs(fd(cm, x) - oracle::dense_fd(dm, x)) < 1e-7);
      CHECK(std::abs(fd(cp, x) - oracle::dense_fd(dp, x)) < 1e-7);
    }
    if (g.order() == 2) {
      // second level, labels nest
      auto cpm = minus_transform(cp);
      auto dpm = oracle::dense_minus(dp);
      CHECK(std::abs(holevo_information(cpm) - oracle::dense_info(dpm)) < 1e-9);
      CHECK(std::abs(fd(cpm, 1) - oracle::dense_fd(dpm, 1)) < 1e-7);
    }
  }
}

TEST_CASE("plus squares F_d, conservation, ordering") {
  Rng rng(29);
  for (int t = 0; t < 30; ++t) {
    FiniteAbelianGroup g({2 + t % 3});
    auto w = random_channel(g, 2 + t % 2, rng);
    auto cm = minus_transform(w), cp = plus_transform(w);
    auto f = fd_table(w), fp = fd_table(cp);
    for (Elem d = 0; d < g.order(); ++d) CHECK(std::abs(fp.values[d] - f.values[d] * f.values[d]) < 1e-9);
    double i = holevo_information(w), im = holevo_information(cm), ip = holevo_information(cp);
    CHECK(std::abs(im + ip - 2 * i) < 1e-9);
    CHECK(im <= i + 1e-12);
    CHECK(ip >= i - 1e-12);
  }
}

TEST_CASE("synthesize") {
  Rng rng(31);
  auto w = random_channel(FiniteAbelianGroup({3}), 2, rng);
  auto e = synthesize(w, BranchLabel{});
  CHECK(holevo_information(e) == holevo_information(w));
  auto pp = synthesize(w, BranchLabel::parse("++"));
  auto f = fd_table(w), f4 = fd_table(pp);
  for (Elem d = 0; d < 3; ++d) CHECK(std::abs(f4.values[d] - std::pow(f.values[d], 4)) < 1e-9);
  Caps small;
  small.dim_cap = 16;
  CHECK_THROWS_AS(synthesize(w, BranchLabel::parse("+++"), small), CapacityError);
  try {
    synthesize(w, BranchLabel::parse("+++"), small);
  } catch (const CapacityError& err) {
    CHECK(std::string(err.what()).find("256") != std::string::npos);
  }
}

TEST_CASE("scan of the Z4 homomorphism channel") {
  auto res = polarization_scan(z4_homomorphism(), 2, Caps::defaults(), ScanOptions{false, true});
  CHECK_FALSE(res.classical_path);
  REQUIRE(res.records.size() == 4);
  for (auto& r : res.records) {
    CHECK(std::abs(r.I - std::log(2.0)) < 1e-9);
    CHECK(std::abs(r.fd.values[2] - 1.0) < 1e-9);
    CHECK(std::abs(r.fd.values[1]) < 1e-9);
    CHECK(std::abs(r.fd.values[3]) < 1e-9);
    CHECK(res.subgroups[r.best_h].elements() == std::vector<Elem>{0, 2});
  }
}

TEST_CASE("scan of a useless channel") {
  FiniteAbelianGroup z3({3});
  auto mm = DensityMatrix::maximally_mixed(2);
  auto res = polarization_scan(channel_from_states(z3, {mm, mm, mm}), 2);
  for (auto& r : res.records) CHECK(std::abs(r.I) < 1e-12);
}

TEST_CASE("parallel tree scan equals per-branch reference exactly") {
  Rng rng(37);
  auto w = random_channel(FiniteAbelianGroup({2}), 2, rng);
  auto a = polarization_scan(w, 2), b = polarization_scan_serial(w, 2);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].branch == b.records[i].branch);
    CHECK(a.records[i].I == b.records[i].I);
    CHECK(a.records[i].fd.values == b.records[i].fd.values);
    CHECK(a.records[i].best_h == b.records[i].best_h);
  }
  double s = 0;
  for (auto& r : a.records) s += r.I;
  CHECK(std::abs(s - 4 * a.I_W) < 2e-8);
}

TEST_CASE("classical fast path equals the quantum path on diagonal channels") {
  auto w = bsc(0.11);
  auto a = polarization_scan(w, 3);
  auto b = polarization_scan(w, 3, Caps::defaults(), ScanOptions{false, true});
  CHECK(a.classical_path);
  CHECK_FALSE(b.classical_path);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(std::abs(a.records[i].I - b.records[i].I) < 1e-10);
    CHECK(std::abs(a.records[i].F - b.records[i].F) < 1e-10);
  }
}

TEST_CASE("coset-erasure oracle, depth 6") {
  FiniteAbelianGroup g({4});
  oracle::CosetErasure ce{g, {{{0}, 0.5}, {{0, 2}, 0.3}, {{0, 1, 2, 3}, 0.2}}};
  auto w = oracle::ce_channel(ce);
  auto res = polarization_scan(w, 6);
  CHECK(res.classical_path);
  std::vector<oracle::CosetErasure> level{ce};
  for (int m = 0; m < 6; ++m) {
    std::vector<oracle::CosetErasure> next;
    for (auto& c : level) {
      next.push_back(oracle::ce_minus(c));
      next.push_back(oracle::ce_plus(c));
    }
    level = next;
  }
  for (std::size_t i = 0; i < level.size(); ++i) {
    CHECK(std::abs(res.records[i].I - oracle::ce_info(level[i])) < 1e-10);
    for (Elem d = 0; d < 4; ++d) CHECK(std::abs(res.records[i].fd.values[d] - oracle::ce_fd(level[i], d)) < 1e-10);
  }
}

TEST_CASE("BSC scan against the crossover-mixture oracle, depth 6") {
  // near-perfect branches carry crossovers around 1e-12, where a coarse
  // output merge shifted F by ~1e-7
  for (int n = 1; n <= 6; ++n) {
    auto res = polarization_scan(bsc(0.11), n);
    for (const auto& r : res.records) {
      oracle::BscMixture m{{0.11, 1.0}};
      for (Sign s : r.branch.signs) m = s == Sign::Minus ? oracle::bsc_minus(m) : oracle::bsc_plus(m);
      CHECK(std::abs(r.I - oracle::bsc_info(m)) < 1e-10);
      CHECK(std::abs(r.F - oracle::bsc_F(m)) < 1e-10);
    }
  }
}

TEST_CASE("BSC polarizes: fewer intermediate branches at n=6 than at n=3") {
  auto frac = [](const ScanResult& r) {
    int c = 0;
    for (auto& x : r.records) c += x.I > 0.05 && x.I < std::log(2.0) - 0.05;
    return static_cast<double>(c) / r.records.size();
  };
  auto w = bsc(0.11);
  double f3 = frac(polarization_scan(w, 3)), f6 = frac(polarization_scan(w, 6));
  CHECK(f6 < f3);
}

TEST_CASE("process sample") {
  Rng rng(41);
  auto w = random_channel(FiniteAbelianGroup({4}), 2, rng);
  auto ps = process_sample(w, 2, 6, 5);
  CHECK(ps.max_martingale_gap < 1e-9);
  CHECK(ps.max_submartingale_deficit < 1e-9);
  auto again = process_sample(w, 2, 6, 5);
  for (std::size_t t = 0; t < ps.paths.size(); ++t)
    for (std::size_t m = 0; m < ps.paths[t].size(); ++m) CHECK(ps.paths[t][m].I == again.paths[t][m].I);
  for (auto& p : ps.paths)
    for (std::size_t m = 0; m + 1 < p.size(); ++m)
      CHECK(std::abs(p[m].Fmax_plus - p[m].Fmax * p[m].Fmax) < 1e-9);
  // exact mean at each depth from the full enumeration
  auto res = polarization_scan(w, 2);
  double s = 0;
  for (auto& r : res.records) s += r.I;
  CHECK(std::abs(s / 4 - holevo_information(w)) < 1e-9);
}

}
