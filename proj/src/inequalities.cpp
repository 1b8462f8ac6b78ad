#include "cqpolar/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>

#include "cqpolar/channel_io.hpp"
#include "cqpolar/errors.hpp"
#include "cqpolar/parallel.hpp"
#include "cqpolar/polarize.hpp"

namespace cqpolar {

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Le: return "<=";
    case Direction::Ge: return ">=";
    case Direction::Eq: return "==";
  }
  return "?";
}

const char* to_string(FuzzFamily f) {
  switch (f) {
    case FuzzFamily::Mixed: return "mixed";
    case FuzzFamily::Pure: return "pure";
    case FuzzFamily::Spread: return "spread";
    case FuzzFamily::NearHomomorphism: return "near-homomorphism";
  }
  return "?";
}

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j{{"check_id", check_id},
                   {"instance", instance},
                   {"seed", seed},
                   {"lhs", lhs},
                   {"rhs", rhs},
                   {"margin", margin},
                   {"direction", to_string(direction)},
                   {"tol", tol},
                   {"hypothesis_satisfied", hypothesis_satisfied},
                   {"pass", pass}};
  if (!detail.empty()) j["detail"] = detail;
  if (!replay.is_null()) j["replay"] = replay;
  return j;
}

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<CheckInfo>& catalog_impl() {
  static const std::vector<CheckInfo> c = {
      {"holevo-lower", "I(W) >= log(q/(1+(q-1)F(W)))", Direction::Ge, 1e-7, false, true},
      {"holevo-upper-sqrt", "I(W) <= log(q/2) + log2*sqrt(1-F(W)^2)", Direction::Le, 1e-7, false, true},
      {"holevo-upper-log", "I(W) <= log(1+sqrt(q^2-(1+(q-1)F(W))^2))", Direction::Le, 1e-7, false, true},
      {"union-bound", "1 - Tr(sqrt(P_r)..sqrt(P_1) rho sqrt(P_1)..sqrt(P_r)) <= 2 sqrt(r) sqrt(sum(1-Tr P_i rho))",
       Direction::Le, 1e-7, false, false},
      {"fd-plus-square", "F_d(W+) == F_d(W)^2 for every d", Direction::Eq, 1e-9, false, true},
      {"fd-minus-sandwich", "F_d(W) <= F_d(W-) <= 2F_d(W) + sum_{D!=0,-d} F_D(W) F_{d+D}(W)", Direction::Le, 1e-7,
       false, true},
      {"fmax-plus-square", "Fmax(W+) == Fmax(W)^2", Direction::Eq, 1e-7, false, true},
      {"fmax-minus-range", "Fmax(W) <= Fmax(W-) <= q Fmax(W)", Direction::Le, 1e-7, false, true},
      {"favg-plus-bound", "F(W+) <= min(F(W), (q-1)^2 F(W)^2)", Direction::Le, 1e-7, false, true},
      {"favg-minus-range", "F(W) <= F(W-) <= q(q-1)F(W)", Direction::Le, 1e-7, false, true},
      {"conservation", "I(W-) + I(W+) == 2 I(W)", Direction::Eq, 1e-8, false, true},
      {"quotient-submartingale", "2 I(W[H]) <= I(W-[H]) + I(W+[H]) for every H", Direction::Le, 1e-7, false, true},
      {"nested-decomposition", "I(W[M]) - I(W[H]) == mean over D of I(W[M|D])", Direction::Eq, 1e-7, false, true},
      {"restricted-fidelity-upper", "F(W[M|D]) <= (q|M|/|H|) Fmax^{M|H}(W)", Direction::Le, 1e-7, false, true},
      {"restricted-fidelity-lower",
       "M maximal in H, Fmax^{M|H} >= 1-eps_q => F(W[M|D]) >= cos(((|H|-|M|)/|M|) acos(1-sqrt(1-(1-q(1-Fmax))^2)))",
       Direction::Ge, 1e-7, true, true},
      {"fd-sum-cosine", "all F_{d_i} >= 1-(1-cos(pi/2r))/q => F_{d_1+..+d_r} >= cos(sum acos(1-q(1-F_{d_i})))",
       Direction::Ge, 1e-7, true, true},
      {"cyclic-fmax-upper", "H=<d>, M maximal in H => F_d(W) <= Fmax^{M|H}(W)", Direction::Le, 1e-7, false, true},
      {"cyclic-fd-lower", "H=<d>, all Fmax^{M|H} >= 1-(1-cos(pi/2q))/q => F_d >= cos(q acos(1-q(1-min Fmax)))",
       Direction::Ge, 1e-7, true, true},
      {"quotient-fidelity-minus", "F(W-[H]) <= |H| q (q-|H|) F(W[H])", Direction::Le, 1e-7, false, true},
      {"quotient-fidelity-plus", "F(W+[H]) <= |H| (q-|H|)^2 F(W[H])^2", Direction::Le, 1e-7, false, true},
      {"near-homomorphism",
       "F_d > 1-eps on H, F_d < eps off H, eps < eps_q => |I(W)-log|G/H||, |I(W[H])-log|G/H|| < delta_q(eps)",
       Direction::Le, 1e-7, true, true},
      {"trace-sqrt-subadditive", "Tr sqrt(A+B) <= Tr sqrt(A) + Tr sqrt(B)", Direction::Le, 1e-7, false, false},
      {"mixture-fidelity", "F(sum p_i rho_i, sum q_j sigma_j) <= sum sqrt(p_i q_j) F(rho_i, sigma_j)", Direction::Le,
       1e-7, false, false},
      {"coset-fmax", "Fmax^{H|G}(W) <= (q-|H|) F(W[H])", Direction::Le, 1e-7, false, true},
      {"pgm-error", "pretty-good measurement error <= (q-1) F(W)", Direction::Le, 1e-7, false, true},
      {"helstrom-error", "q = 2: Helstrom error <= min(PGM error, F(W))", Direction::Le, 1e-7, true, true},
  };
  return c;
}

// Keeps the sub-case closest to (or furthest past) violation.
class Worst {
 public:
  explicit Worst(Direction d) : dir_(d) {}
  void add(double lhs, double rhs, std::string detail = {}) {
    const double m = lhs - rhs;
    const double s = dir_ == Direction::Le ? m : dir_ == Direction::Ge ? -m : std::abs(m);
    if (!any_ || s > score_) {
      any_ = true;
      score_ = s;
      lhs_ = lhs;
      rhs_ = rhs;
      detail_ = std::move(detail);
    }
  }
  void fill(CheckReport& r) const {
    r.hypothesis_satisfied = any_;
    if (!any_) return;
    r.lhs = lhs_;
    r.rhs = rhs_;
    r.detail = detail_;
  }

 private:
  Direction dir_;
  bool any_ = false;
  double score_ = 0.0, lhs_ = 0.0, rhs_ = 0.0;
  std::string detail_;
};

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

std::uint64_t id_tag(const std::string& id) { return std::hash<std::string>{}(id) & 0xffffffffULL; }

// Lazily computed quantities shared by the channel checks of one instance.
class Ctx {
 public:
  Ctx(const CqChannel& w, std::uint64_t seed) : w_(w), seed_(seed) {}

  const CqChannel& w() const { return w_; }
  std::uint64_t seed() const { return seed_; }
  int q() const { return w_.q(); }
  const FiniteAbelianGroup& g() const { return w_.group(); }

  const CqChannel& minus() { return get(wm_, [&] { return minus_transform(w_); }); }
  const CqChannel& plus() { return get(wp_, [&] { return plus_transform(w_); }); }
  const FdTable& fd() { return get(fd_, [&] { return fd_table(w_); }); }
  const FdTable& fd_minus() { return get(fdm_, [&] { return fd_table(minus()); }); }
  const FdTable& fd_plus() { return get(fdp_, [&] { return fd_table(plus()); }); }
  double I() { return get(i_, [&] { return holevo_information(w_); }); }
  double F() { return avg_fidelity(fd()); }
  const std::vector<Subgroup>& subgroups() { return get(subs_, [&] { return enumerate_subgroups(g()); }); }
  const CqChannel& quotient(std::size_t h) {
    if (quot_.empty()) quot_.resize(subgroups().size());
    return get(quot_[h], [&] { return quotient_channel(w_, subgroups()[h]); });
  }

 private:
  template <class T, class F>
  const T& get(std::optional<T>& slot, F make) {
    if (!slot) slot = make();
    return *slot;
  }
  const CqChannel& w_;
  std::uint64_t seed_;
  std::optional<CqChannel> wm_, wp_;
  std::optional<FdTable> fd_, fdm_, fdp_;
  std::optional<double> i_;
  std::optional<std::vector<Subgroup>> subs_;
  std::vector<std::optional<CqChannel>> quot_;
};

std::string elem_str(const FiniteAbelianGroup& g, Elem d) { return "d=" + g.label(d); }

// Holevo information against average fidelity ------------------------

void holevo_lower(Ctx& c, CheckReport& r) {
  const double q = c.q();
  r.lhs = c.I();
  r.rhs = std::log(q / (1.0 + (q - 1.0) * c.F()));
}

void holevo_upper_sqrt(Ctx& c, CheckReport& r) {
  const double q = c.q(), f = c.F();
  r.lhs = c.I();
  r.rhs = std::log(q / 2.0) + std::log(2.0) * std::sqrt(std::max(0.0, 1.0 - f * f));
}

void holevo_upper_log(Ctx& c, CheckReport& r) {
  const double q = c.q(), f = c.F();
  const double a = 1.0 + (q - 1.0) * f;
  r.lhs = c.I();
  r.rhs = std::log(1.0 + std::sqrt(std::max(0.0, q * q - a * a)));
}

// Fidelity parameters under one polarization step ------------------------

void fd_plus_square(Ctx& c, CheckReport& r) {
  Worst w(Direction::Eq);
  for (Elem d = 0; d < c.q(); ++d) w.add(c.fd_plus().values[d], c.fd().values[d] * c.fd().values[d], elem_str(c.g(), d));
  w.fill(r);
}

void fd_minus_sandwich(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  const auto& f = c.fd().values;
  const auto& g = c.g();
  for (Elem d = 0; d < c.q(); ++d) {
    double up = 2.0 * f[d];
    for (Elem D = 1; D < c.q(); ++D)
      if (D != g.neg(d)) up += f[D] * f[g.add(d, D)];
    w.add(f[d], c.fd_minus().values[d], elem_str(g, d) + " lower");
    w.add(c.fd_minus().values[d], up, elem_str(g, d) + " upper");
  }
  w.fill(r);
}

void fmax_plus_square(Ctx& c, CheckReport& r) {
  r.lhs = f_max(c.fd_plus());
  r.rhs = f_max(c.fd()) * f_max(c.fd());
}

void fmax_minus_range(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  const double fm = f_max(c.fd()), fmm = f_max(c.fd_minus());
  w.add(fm, fmm, "lower");
  w.add(fmm, c.q() * fm, "upper");
  w.fill(r);
}

void favg_plus_bound(Ctx& c, CheckReport& r) {
  const double f = c.F(), q1 = c.q() - 1.0;
  r.lhs = avg_fidelity(c.fd_plus());
  r.rhs = std::min(f, q1 * q1 * f * f);
}

void favg_minus_range(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  const double f = c.F(), fm = avg_fidelity(c.fd_minus());
  w.add(f, fm, "lower");
  w.add(fm, c.q() * (c.q() - 1.0) * f, "upper");
  w.fill(r);
}

void conservation(Ctx& c, CheckReport& r) {
  r.lhs = holevo_information(c.minus()) + holevo_information(c.plus());
  r.rhs = 2.0 * c.I();
}

// Quotients ----------------------------------------------------------------

void quotient_submartingale(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  for (std::size_t h = 0; h < c.subgroups().size(); ++h) {
    const auto& H = c.subgroups()[h];
    const double im = holevo_information(quotient_channel(c.minus(), H));
    const double ip = holevo_information(quotient_channel(c.plus(), H));
    w.add(2.0 * holevo_information(c.quotient(h)), im + ip, "H=" + H.to_string());
  }
  w.fill(r);
}

void nested_decomposition(Ctx& c, CheckReport& r) {
  Worst w(Direction::Eq);
  const auto& subs = c.subgroups();
  for (const auto& H : subs)
    for (const auto& M : subs) {
      if (!M.is_subset_of(H)) continue;
      auto ni = nested_information(c.w(), M, H);
      w.add(ni.value, ni.decomposition, "M=" + M.to_string() + " H=" + H.to_string());
    }
  w.fill(r);
}

void restricted_fidelity_upper(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  const auto& subs = c.subgroups();
  for (const auto& H : subs)
    for (const auto& M : subs) {
      if (!M.is_subset_of(H)) continue;
      const double bound = double(c.q()) * M.order() / H.order() * nested_fmax(c.fd(), M, H);
      for (const auto& D : quotient_cosets(H)) {
        const double f = avg_fidelity(restricted_quotient_channel(c.w(), M, H, D));
        w.add(f, bound, "M=" + M.to_string() + " H=" + H.to_string() + " D=" + c.g().label(D.representative));
      }
    }
  w.fill(r);
}

double restricted_eps(int q) {
  if (q <= 1) return 0.0;
  const double a = 1.0 - std::cos(kPi / (2.0 * (q - 1)));
  return (1.0 - std::sqrt(std::max(0.0, 1.0 - a * a))) / q;
}

void restricted_fidelity_lower(Ctx& c, CheckReport& r) {
  Worst w(Direction::Ge);
  const double q = c.q();
  const double eps = restricted_eps(c.q());
  for (const auto& H : c.subgroups()) {
    if (H.order() == 1) continue;
    for (const auto& M : maximal_subgroups(H)) {
      const double fm = nested_fmax(c.fd(), M, H);
      if (fm < 1.0 - eps) continue;
      const double a = 1.0 - q * (1.0 - fm);
      const double inner = 1.0 - std::sqrt(std::max(0.0, 1.0 - a * a));
      const double mult = double(H.order() - M.order()) / M.order();
      const double bound = std::cos(mult * std::acos(clamp_unit(inner)));
      for (const auto& D : quotient_cosets(H)) {
        const double f = avg_fidelity(restricted_quotient_channel(c.w(), M, H, D));
        w.add(f, bound, "M=" + M.to_string() + " H=" + H.to_string() + " D=" + c.g().label(D.representative));
      }
    }
  }
  w.fill(r);
}

void fd_sum_cosine(Ctx& c, CheckReport& r) {
  Worst w(Direction::Ge);
  const int q = c.q();
  if (q > 1) {
    Rng rng = make_rng(c.seed(), {0x6d5});
    const auto& f = c.fd().values;
    // every pair, plus a handful of random triples
    std::vector<std::vector<Elem>> tuples;
    for (Elem a = 1; a < q; ++a)
      for (Elem b = 1; b < q; ++b) tuples.push_back({a, b});
    for (int t = 0; t < 6; ++t) tuples.push_back({1 + uniform_int(rng, q - 1), 1 + uniform_int(rng, q - 1), 1 + uniform_int(rng, q - 1)});
    for (const auto& ds : tuples) {
      const double rr = static_cast<double>(ds.size());
      const double gate = 1.0 - (1.0 - std::cos(kPi / (2.0 * rr))) / q;
      bool ok = true;
      double ang = 0.0;
      Elem sum = 0;
      std::string lab;
      for (Elem d : ds) {
        ok = ok && f[d] >= gate;
        ang += std::acos(clamp_unit(1.0 - q * (1.0 - f[d])));
        sum = c.g().add(sum, d);
        lab += (lab.empty() ? "" : "+") + c.g().label(d);
      }
      if (ok) w.add(f[sum], std::cos(ang), lab);
    }
  }
  w.fill(r);
}

void cyclic_fmax_upper(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  for (Elem d = 1; d < c.q(); ++d) {
    auto H = generated_subgroup(c.g(), d);
    for (const auto& M : maximal_subgroups(H))
      w.add(c.fd().values[d], nested_fmax(c.fd(), M, H), elem_str(c.g(), d) + " M=" + M.to_string());
  }
  w.fill(r);
}

void cyclic_fd_lower(Ctx& c, CheckReport& r) {
  Worst w(Direction::Ge);
  const double q = c.q();
  const double gate = 1.0 - (1.0 - std::cos(kPi / (2.0 * q))) / q;
  for (Elem d = 1; d < c.q(); ++d) {
    auto H = generated_subgroup(c.g(), d);
    double mn = 1.0;
    for (const auto& M : maximal_subgroups(H)) mn = std::min(mn, nested_fmax(c.fd(), M, H));
    if (mn < gate) continue;
    w.add(c.fd().values[d], std::cos(q * std::acos(clamp_unit(1.0 - q * (1.0 - mn)))), elem_str(c.g(), d));
  }
  w.fill(r);
}

void quotient_fidelity_minus(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  const double q = c.q();
  for (std::size_t h = 0; h < c.subgroups().size(); ++h) {
    const auto& H = c.subgroups()[h];
    const double fm = avg_fidelity(quotient_channel(c.minus(), H));
    w.add(fm, H.order() * q * (q - H.order()) * avg_fidelity(c.quotient(h)), "H=" + H.to_string());
  }
  w.fill(r);
}

void quotient_fidelity_plus(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  const double q = c.q();
  for (std::size_t h = 0; h < c.subgroups().size(); ++h) {
    const auto& H = c.subgroups()[h];
    const double fp = avg_fidelity(quotient_channel(c.plus(), H));
    const double f = avg_fidelity(c.quotient(h));
    const double k = q - H.order();
    w.add(fp, H.order() * k * k * f * f, "H=" + H.to_string());
  }
  w.fill(r);
}

void near_homomorphism(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  const int q = c.q();
  const auto& f = c.fd().values;
  // The subgroup whose profile is tightest decides eps.
  int best = -1;
  double eps = 2.0;
  for (std::size_t h = 0; h < c.subgroups().size(); ++h) {
    const auto& H = c.subgroups()[h];
    double e = 0.0;
    for (Elem d = 0; d < q; ++d) e = std::max(e, H.contains(d) ? 1.0 - f[d] : f[d]);
    if (e < eps) {
      eps = e;
      best = static_cast<int>(h);
    }
  }
  if (best >= 0 && eps < restricted_eps(q)) {
    const auto& H = c.subgroups()[best];
    const double qd = q, m = H.index(), h = H.order();
    const double a = 1.0 + (qd - 1.0) * (1.0 - eps);
    const double d1 = std::log(1.0 + std::sqrt(std::max(0.0, qd * qd - a * a)));
    const double d2 = std::log(1.0 + (m - 1.0) * qd * eps);
    double cb = 1.0;
    if (h > 1) {
      const double b = 1.0 - qd * eps;
      cb = std::cos((h - 1.0) * std::acos(clamp_unit(1.0 - std::sqrt(std::max(0.0, 1.0 - b * b)))));
    }
    const double e3 = 1.0 + (h - 1.0) * cb;
    const double d3 = std::log(1.0 + std::sqrt(std::max(0.0, h * h - e3 * e3)));
    const double delta = std::max(d1, d2 + d3);
    const double lm = std::log(m);
    const double dev = std::max(std::abs(c.I() - lm), std::abs(holevo_information(c.quotient(best)) - lm));
    char buf[64];
    std::snprintf(buf, sizeof buf, " eps=%.3g", eps);
    w.add(dev, delta, "H=" + H.to_string() + buf);
  }
  w.fill(r);
}

void coset_fmax(Ctx& c, CheckReport& r) {
  Worst w(Direction::Le);
  const auto full = full_subgroup(c.g());
  for (std::size_t h = 0; h < c.subgroups().size(); ++h) {
    const auto& H = c.subgroups()[h];
    w.add(nested_fmax(c.fd(), H, full), (c.q() - H.order()) * avg_fidelity(c.quotient(h)), "H=" + H.to_string());
  }
  w.fill(r);
}

// Per classical label, the weighted blocks (1/q) B_{x,l}; zero where absent.
std::vector<std::vector<Matrix>> weighted_blocks(const CqChannel& w) {
  std::vector<std::vector<Matrix>> out;
  for (const auto& l : w.label_set()) {
    std::vector<Matrix> v;
    for (Elem x = 0; x < w.q(); ++x) {
      const Branch* b = w.output(x).find(l);
      v.push_back(b ? Matrix(b->block() / double(w.q())) : Matrix(Matrix::Zero(w.dim(), w.dim())));
    }
    out.push_back(std::move(v));
  }
  return out;
}

double pgm_error_of(const CqChannel& w) {
  double e = 0.0;
  for (const auto& v : weighted_blocks(w)) e += povm_error(pgm_from_weighted(v), v);
  return e;
}

void pgm_error(Ctx& c, CheckReport& r) {
  r.lhs = pgm_error_of(c.w());
  r.rhs = (c.q() - 1.0) * c.F();
}

void helstrom(Ctx& c, CheckReport& r) {
  if (c.q() != 2) {
    r.hypothesis_satisfied = false;
    return;
  }
  double e = 0.0;
  for (const auto& v : weighted_blocks(c.w()))
    e += 0.5 * ((v[0] + v[1]).trace().real() - trace_norm_hermitian(v[0] - v[1]));
  Worst w(Direction::Le);
  w.add(e, pgm_error_of(c.w()), "vs pgm");
  w.add(e, c.F(), "vs F");
  w.fill(r);
}

// Matrix-level checks ---------------------------------------------------------

void union_bound(int dim_hint, std::uint64_t seed, CheckReport& r) {
  Rng rng = make_rng(seed, {0x1b});
  const int k = dim_hint > 0 ? std::min(dim_hint, 8) : 1 + uniform_int(rng, 8);
  const int n = 1 + uniform_int(rng, 5);
  std::vector<Matrix> ops;
  for (int i = 0; i < n; ++i) ops.push_back(random_subidentity(k, rng));
  Matrix rho = random_density(k, 1 + uniform_int(rng, k), rng).matrix();
  r.lhs = 1.0 - sequential_measure(ops, rho).survival;
  r.rhs = sequential_union_bound(ops, rho);
  r.detail = "r=" + std::to_string(n) + " dim=" + std::to_string(k);
  r.replay["rho"] = matrix_json(rho);
  for (const auto& o : ops) r.replay["ops"].push_back(matrix_json(o));
}

void trace_sqrt_sub(int dim_hint, std::uint64_t seed, CheckReport& r) {
  Rng rng = make_rng(seed, {0x75});
  const int k = dim_hint > 0 ? std::min(dim_hint, 8) : 1 + uniform_int(rng, 8);
  Matrix a = random_psd(k, 1 + uniform_int(rng, k), rng);
  Matrix b = random_psd(k, 1 + uniform_int(rng, k), rng);
  r.lhs = trace_sqrt(a + b);
  r.rhs = trace_sqrt(a) + trace_sqrt(b);
  r.detail = "dim=" + std::to_string(k);
  r.replay["A"] = matrix_json(a);
  r.replay["B"] = matrix_json(b);
}

std::vector<double> random_simplex(int n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = e(rng));
  for (auto& x : p) x /= s;
  return p;
}

void mixture_fid(int dim_hint, std::uint64_t seed, CheckReport& r) {
  Rng rng = make_rng(seed, {0x12});
  const int k = dim_hint > 0 ? std::min(dim_hint, 8) : 1 + uniform_int(rng, 6);
  const int n = 1 + uniform_int(rng, 3), m = 1 + uniform_int(rng, 3);
  auto p = random_simplex(n, rng), qv = random_simplex(m, rng);
  std::vector<DensityMatrix> rho, sig;
  for (int i = 0; i < n; ++i) rho.push_back(random_density(k, 1 + uniform_int(rng, k), rng));
  for (int j = 0; j < m; ++j) sig.push_back(random_density(k, 1 + uniform_int(rng, k), rng));
  Matrix a = Matrix::Zero(k, k), b = Matrix::Zero(k, k);
  for (int i = 0; i < n; ++i) a += p[i] * rho[i].matrix();
  for (int j = 0; j < m; ++j) b += qv[j] * sig[j].matrix();
  double rhs = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) rhs += std::sqrt(p[i] * qv[j]) * fidelity(rho[i], sig[j]);
  r.lhs = fidelity_psd(a, b);
  r.rhs = rhs;
  r.detail = "n=" + std::to_string(n) + " m=" + std::to_string(m) + " dim=" + std::to_string(k);
  r.replay["p"] = p;
  r.replay["q"] = qv;
  for (auto& x : rho) r.replay["rho"].push_back(matrix_json(x.matrix()));
  for (auto& x : sig) r.replay["sigma"].push_back(matrix_json(x.matrix()));
}

using ChannelFn = void (*)(Ctx&, CheckReport&);
using MatrixFn = void (*)(int, std::uint64_t, CheckReport&);

const std::map<std::string, ChannelFn>& channel_fns() {
  static const std::map<std::string, ChannelFn> m = {
      {"holevo-lower", holevo_lower},
      {"holevo-upper-sqrt", holevo_upper_sqrt},
      {"holevo-upper-log", holevo_upper_log},
      {"fd-plus-square", fd_plus_square},
      {"fd-minus-sandwich", fd_minus_sandwich},
      {"fmax-plus-square", fmax_plus_square},
      {"fmax-minus-range", fmax_minus_range},
      {"favg-plus-bound", favg_plus_bound},
      {"favg-minus-range", favg_minus_range},
      {"conservation", conservation},
      {"quotient-submartingale", quotient_submartingale},
      {"nested-decomposition", nested_decomposition},
      {"restricted-fidelity-upper", restricted_fidelity_upper},
      {"restricted-fidelity-lower", restricted_fidelity_lower},
      {"fd-sum-cosine", fd_sum_cosine},
      {"cyclic-fmax-upper", cyclic_fmax_upper},
      {"cyclic-fd-lower", cyclic_fd_lower},
      {"quotient-fidelity-minus", quotient_fidelity_minus},
      {"quotient-fidelity-plus", quotient_fidelity_plus},
      {"near-homomorphism", near_homomorphism},
      {"coset-fmax", coset_fmax},
      {"pgm-error", pgm_error},
      {"helstrom-error", helstrom},
  };
  return m;
}

const std::map<std::string, MatrixFn>& matrix_fns() {
  static const std::map<std::string, MatrixFn> m = {
      {"union-bound", union_bound},
      {"trace-sqrt-subadditive", trace_sqrt_sub},
      {"mixture-fidelity", mixture_fid},
  };
  return m;
}

void finish(CheckReport& r) {
  if (!r.hypothesis_satisfied) {
    r.lhs = r.rhs = r.margin = 0.0;
    r.pass = true;
    return;
  }
  r.margin = r.lhs - r.rhs;
  switch (r.direction) {
    case Direction::Le: r.pass = r.margin <= r.tol; break;
    case Direction::Ge: r.pass = r.margin >= -r.tol; break;
    case Direction::Eq: r.pass = std::abs(r.margin) <= r.tol; break;
  }
  if (!std::isfinite(r.margin)) r.pass = false;
}

// dim_hint 0: the matrix checks pick their own dimension
std::vector<CheckReport> evaluate(const std::vector<std::string>& ids, const CqChannel* w, int dim_hint,
                                  std::uint64_t seed, const std::string& instance) {
  std::optional<Ctx> ctx;
  if (w) ctx.emplace(*w, seed);
  std::vector<CheckReport> out;
  for (const auto& id : ids) {
    const auto& info = check_info(id);
    CheckReport r;
    r.check_id = id;
    r.instance = instance;
    r.seed = seed;
    r.direction = info.direction;
    r.tol = info.tol;
    if (info.needs_channel) {
      if (!ctx) throw std::invalid_argument("check '" + id + "' needs a channel");
      channel_fns().at(id)(*ctx, r);
    } else {
      matrix_fns().at(id)(dim_hint, derive_seed(seed, {id_tag(id)}), r);
    }
    finish(r);
    if (r.pass) {
      r.replay = nullptr;
    } else {
      nlohmann::json rep = r.replay.is_null() ? nlohmann::json::object() : r.replay;
      rep["check_id"] = id;
      rep["seed"] = seed;
      rep["instance"] = instance;
      if (info.needs_channel) rep["channel"] = channel_to_json(*w);
      r.replay = rep;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::string> resolve(const std::vector<std::string>& ids) {
  if (ids.empty()) return check_ids();
  for (const auto& id : ids) check_info(id);
  return ids;
}

struct Job {
  int q, k, t;
};

std::vector<Job> jobs_of(int trials, const FuzzOptions& opt) {
  std::vector<Job> jobs;
  for (int q : opt.qs)
    for (int k : opt.ks)
      for (int t = 0; t < trials; ++t) jobs.push_back({q, k, t});
  return jobs;
}

std::vector<CheckReport> run_job(std::uint64_t seed, const Job& j, const std::vector<std::string>& ids) {
  auto inst = make_fuzz_instance(seed, j.q, j.k, j.t);
  // matrix checks get a fresh dimension per instance, not the channel's
  std::vector<std::string> chan, mat;
  for (const auto& id : ids) (check_info(id).needs_channel ? chan : mat).push_back(id);
  auto a = evaluate(chan, &inst.w, 0, inst.seed, inst.descriptor);
  auto b = evaluate(mat, nullptr, 0, inst.seed, "random matrices #" + std::to_string(j.t) + " cfg q=" +
                                                     std::to_string(j.q) + " k=" + std::to_string(j.k));
  // keep the catalogue order
  std::vector<CheckReport> out;
  std::size_t ia = 0, ib = 0;
  for (const auto& id : ids) out.push_back(check_info(id).needs_channel ? std::move(a[ia++]) : std::move(b[ib++]));
  return out;
}

}  // namespace

const std::vector<CheckInfo>& check_catalog() { return catalog_impl(); }

std::vector<std::string> check_ids() {
  std::vector<std::string> v;
  for (const auto& c : catalog_impl()) v.push_back(c.id);
  return v;
}

const CheckInfo& check_info(const std::string& id) {
  for (const auto& c : catalog_impl())
    if (c.id == id) return c;
  throw std::invalid_argument("unknown check id '" + id + "'");
}

CheckReport run_check(const std::string& id, const CqChannel& w, std::uint64_t seed, const std::string& instance) {
  return evaluate({id}, &w, w.dim(), seed, instance).front();
}

std::vector<CheckReport> run_checks(const std::vector<std::string>& ids, const CqChannel& w, std::uint64_t seed,
                                    const std::string& instance) {
  return evaluate(resolve(ids), &w, w.dim(), seed, instance);
}

FuzzInstance make_fuzz_instance(std::uint64_t seed, int q, int k, int t) {
  FuzzInstance fi;
  fi.family = static_cast<FuzzFamily>(t % 4);
  const bool klein = q == 4 && (t / 4) % 2 == 1;
  FiniteAbelianGroup g = klein ? FiniteAbelianGroup({2, 2}) : FiniteAbelianGroup({q});
  fi.seed = derive_seed(seed, {static_cast<std::uint64_t>(q), static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(t)});
  Rng rng(fi.seed);
  std::vector<DensityMatrix> st;
  int dim = k;
  switch (fi.family) {
    case FuzzFamily::Mixed:
      for (int x = 0; x < q; ++x) st.push_back(random_density(k, 1 + uniform_int(rng, k), rng));
      break;
    case FuzzFamily::Pure:
      for (int x = 0; x < q; ++x) st.push_back(random_density(k, 1, rng));
      break;
    case FuzzFamily::Spread: {
      // all outputs near one full-rank state: fidelities close to 1
      const double s = std::pow(10.0, -3.0 + 1.5 * uniform01(rng));
      DensityMatrix base = random_density(k, k, rng);
      for (int x = 0; x < q; ++x)
        st.push_back(DensityMatrix::from((1.0 - s) * base.matrix() + s * random_density(k, 1 + uniform_int(rng, k), rng).matrix()));
      break;
    }
    case FuzzFamily::NearHomomorphism: {
      auto subs = enumerate_subgroups(g);
      const auto& h = subs[uniform_int(rng, static_cast<int>(subs.size()))];
      auto qg = make_quotient(h);
      dim = std::max(k, h.index());
      const double s = std::pow(10.0, -8.0 + 2.0 * uniform01(rng));
      for (int x = 0; x < q; ++x) {
        Matrix m = (1.0 - s) * DensityMatrix::basis(dim, qg.coset_of[x]).matrix() +
                   s * random_density(dim, 1 + uniform_int(rng, dim), rng).matrix();
        st.push_back(DensityMatrix::from(m));
      }
      break;
    }
  }
  fi.w = channel_from_states(g, st);
  fi.descriptor = std::string(to_string(fi.family)) + " " + (klein ? "Z2xZ2" : "Z" + std::to_string(q)) +
                  " dim=" + std::to_string(dim) + " #" + std::to_string(t);
  return fi;
}

std::vector<CheckReport> run_all(std::uint64_t seed, int trials, const FuzzOptions& opt) {
  const auto ids = resolve(opt.ids);
  const auto jobs = jobs_of(trials, opt);
  std::vector<std::vector<CheckReport>> parts(jobs.size());
  ErrorTrap trap;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < jobs.size(); ++i) trap.run([&] { parts[i] = run_job(seed, jobs[i], ids); });
  trap.rethrow();
  std::vector<CheckReport> out;
  for (auto& p : parts)
    for (auto& r : p) out.push_back(std::move(r));
  return out;
}

std::vector<CheckReport> run_all_serial(std::uint64_t seed, int trials, const FuzzOptions& opt) {
  const auto ids = resolve(opt.ids);
  std::vector<CheckReport> out;
  for (const auto& j : jobs_of(trials, opt))
    for (auto& r : run_job(seed, j, ids)) out.push_back(std::move(r));
  return out;
}

std::vector<CheckSummary> summarize(const std::vector<CheckReport>& reports) {
  std::vector<CheckSummary> out;
  std::map<std::string, std::size_t> at;
  for (const auto& r : reports) {
    auto it = at.find(r.check_id);
    if (it == at.end()) {
      it = at.emplace(r.check_id, out.size()).first;
      out.push_back({r.check_id, 0, 0, 0, 0.0});
      // seed the extreme with something any real margin replaces
      out.back().worst_margin = r.direction == Direction::Ge ? INFINITY : -INFINITY;
    }
    auto& s = out[it->second];
    ++s.instances;
    if (!r.pass) ++s.failures;
    if (!r.hypothesis_satisfied) {
      ++s.vacuous;
      continue;
    }
    switch (r.direction) {
      case Direction::Le: s.worst_margin = std::max(s.worst_margin, r.margin); break;
      case Direction::Ge: s.worst_margin = std::min(s.worst_margin, r.margin); break;
      case Direction::Eq: s.worst_margin = std::max(s.worst_margin, std::abs(r.margin)); break;
    }
  }
  for (auto& s : out)
    if (!std::isfinite(s.worst_margin)) s.worst_margin = 0.0;
  return out;
}

}  // namespace cqpolar
