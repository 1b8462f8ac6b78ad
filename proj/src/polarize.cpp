#include "cqpolar/polarize.hpp"

#include <algorithm>
#include <cmath>

#include "cqpolar/errors.hpp"
#include "cqpolar/parallel.hpp"

namespace cqpolar {

std::size_t BranchLabel::index() const {
  std::size_t v = 0;
  for (Sign s : signs) v = (v << 1) | static_cast<std::size_t>(s);
  return v;
}

BranchLabel BranchLabel::from_index(std::size_t idx, int n) {
  BranchLabel b;
  b.signs.resize(n);
  for (int j = n - 1; j >= 0; --j) {
    b.signs[j] = (idx & 1) ? Sign::Plus : Sign::Minus;
    idx >>= 1;
  }
  return b;
}

std::string BranchLabel::to_string() const {
  std::string s;
  for (Sign x : signs) s += (x == Sign::Plus) ? '+' : '-';
  return s;
}

BranchLabel BranchLabel::parse(const std::string& s) {
  BranchLabel b;
  for (char c : s) {
    if (c == '+') b.signs.push_back(Sign::Plus);
    else if (c == '-') b.signs.push_back(Sign::Minus);
    else if (c != ' ' && c != ',' && c != '(' && c != ')') throw LoadError("bad branch label '" + s + "'");
  }
  return b;
}

std::vector<BranchLabel> branch_order(int n) {
  std::vector<BranchLabel> out;
  for (std::size_t i = 0; i < (std::size_t{1} << n); ++i) out.push_back(BranchLabel::from_index(i, n));
  return out;
}

std::vector<BranchLabel> last_major_order(int n) {
  auto out = branch_order(n);
  for (auto& b : out) std::reverse(b.signs.begin(), b.signs.end());
  return out;
}

namespace {

struct FactorTable {
  std::vector<Label> labels;
  std::vector<std::vector<const Matrix*>> at;  // [x][label index]
};

FactorTable factor_table(const CqChannel& w) {
  FactorTable t;
  t.labels = w.label_set();
  t.at.assign(w.q(), std::vector<const Matrix*>(t.labels.size(), nullptr));
  for (Elem x = 0; x < w.q(); ++x)
    for (std::size_t l = 0; l < t.labels.size(); ++l)
      if (const Branch* b = w.output(x).find(t.labels[l])) t.at[x][l] = &b->factor;
  return t;
}

void check_caps(const CqChannel& w, std::size_t out_branches, const Caps& caps) {
  const std::size_t d = static_cast<std::size_t>(w.dim()) * w.dim();
  if (d > caps.dim_cap)
    throw CapacityError("synthesised quantum dimension " + std::to_string(d) + " exceeds cap " + std::to_string(caps.dim_cap));
  if (out_branches > caps.branch_cap)
    throw CapacityError("synthesised channel needs " + std::to_string(out_branches) + " classical branches, cap is " +
                        std::to_string(caps.branch_cap));
}

Label concat(const Label& a, const Label& b) {
  Label c = a;
  c.insert(c.end(), b.begin(), b.end());
  return c;
}

}  // namespace

CqChannel minus_transform(const CqChannel& w, const Caps& caps) {
  const int q = w.q();
  const auto& g = w.group();
  auto t = factor_table(w);
  const std::size_t nl = t.labels.size();
  check_caps(w, nl * nl, caps);
  const int k2 = w.dim() * w.dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(q));
  std::vector<Branch> slots(static_cast<std::size_t>(q) * nl * nl);
  ErrorTrap trap;
#pragma omp parallel for schedule(dynamic) if (slots.size() > 16)
  for (std::size_t i = 0; i < slots.size(); ++i) trap.run([&] {
    const Elem u1 = static_cast<Elem>(i / (nl * nl));
    const std::size_t j = (i / nl) % nl, l = i % nl;
    std::vector<Matrix> parts;
    Eigen::Index cols = 0;
    for (Elem u2 = 0; u2 < q; ++u2) {
      const Matrix* a = t.at[g.add(u1, u2)][j];
      const Matrix* b = t.at[u2][l];
      if (!a || !b) continue;
      parts.push_back(kron(*a, *b));
      cols += parts.back().cols();
    }
    if (parts.empty()) return;
    Matrix f(k2, cols);
    Eigen::Index c = 0;
    for (auto& p : parts) {
      f.middleCols(c, p.cols()) = p * scale;
      c += p.cols();
    }
    slots[i] = Branch{concat(t.labels[j], t.labels[l]), compress_factor(f)};
  });
  trap.rethrow();
  std::vector<HybridState> out;
  for (Elem u1 = 0; u1 < q; ++u1) {
    std::vector<Branch> br;
    for (std::size_t i = u1 * nl * nl; i < (u1 + 1) * nl * nl; ++i)
      if (slots[i].factor.cols() > 0) br.push_back(std::move(slots[i]));
    out.emplace_back(k2, std::move(br));
  }
  return CqChannel(g, k2, std::move(out));
}

CqChannel plus_transform(const CqChannel& w, const Caps& caps) {
  const int q = w.q();
  const auto& g = w.group();
  auto t = factor_table(w);
  const std::size_t nl = t.labels.size();
  check_caps(w, static_cast<std::size_t>(q) * nl * nl, caps);
  const int k2 = w.dim() * w.dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(q));
  const std::size_t per = static_cast<std::size_t>(q) * nl * nl;  // (u1, j, l) per output u2
  std::vector<Branch> slots(static_cast<std::size_t>(q) * per);
  ErrorTrap trap;
#pragma omp parallel for schedule(dynamic) if (slots.size() > 16)
  for (std::size_t i = 0; i < slots.size(); ++i) trap.run([&] {
    const Elem u2 = static_cast<Elem>(i / per);
    const std::size_t r = i % per;
    const Elem u1 = static_cast<Elem>(r / (nl * nl));
    const std::size_t j = (r / nl) % nl, l = r % nl;
    const Matrix* a = t.at[g.add(u1, u2)][j];
    const Matrix* b = t.at[u2][l];
    if (!a || !b) return;
    Label lab{u1};
    lab = concat(concat(lab, t.labels[j]), t.labels[l]);
    slots[i] = Branch{std::move(lab), compress_factor(kron(*a, *b) * scale)};
  });
  trap.rethrow();
  std::vector<HybridState> out;
  for (Elem u2 = 0; u2 < q; ++u2) {
    std::vector<Branch> br;
    for (std::size_t i = u2 * per; i < (u2 + 1) * per; ++i)
      if (slots[i].factor.cols() > 0) br.push_back(std::move(slots[i]));
    out.emplace_back(k2, std::move(br));
  }
  return CqChannel(g, k2, std::move(out));
}

namespace {

void precheck_dim(const CqChannel& w, int n, const Caps& caps) {
  double d = w.dim();
  for (int i = 0; i < n; ++i) d *= d;
  if (d > static_cast<double>(caps.dim_cap))
    throw CapacityError("depth " + std::to_string(n) + " needs quantum dimension " + std::to_string(w.dim()) + "^" +
                        std::to_string(1 << n) + " = " + std::to_string(static_cast<long double>(d)) +
                        ", cap is " + std::to_string(caps.dim_cap));
}

}  // namespace

CqChannel synthesize(const CqChannel& w, const BranchLabel& s, const Caps& caps) {
  precheck_dim(w, s.n(), caps);
  CqChannel c = w;
  for (Sign x : s.signs) c = (x == Sign::Minus) ? minus_transform(c, caps) : plus_transform(c, caps);
  return c;
}

ClassicalChannel synthesize(const ClassicalChannel& w, const BranchLabel& s, const Caps& caps) {
  ClassicalChannel c = w;
  for (Sign x : s.signs) c = (x == Sign::Minus) ? minus_transform(c, caps) : plus_transform(c, caps);
  return c;
}

int best_subgroup(const std::vector<Subgroup>& subgroups, double I, const std::vector<SubgroupStat>& stats) {
  int best = -1;
  double best_score = 0.0;
  for (std::size_t i = 0; i < subgroups.size(); ++i) {
    const double lg = std::log(static_cast<double>(subgroups[i].index()));
    const double score = std::abs(I - lg) + std::abs(stats[i].I - lg);
    bool take = false;
    if (best < 0 || score < best_score - 1e-12) {
      take = true;
    } else if (std::abs(score - best_score) <= 1e-12) {
      const auto& a = subgroups[i];
      const auto& b = subgroups[best];
      take = a.order() > b.order() || (a.order() == b.order() && a.elements() < b.elements());
    }
    if (take) {
      best = static_cast<int>(i);
      best_score = score;
    }
  }
  return best;
}

namespace {

struct Context {
  std::vector<Subgroup> subgroups;
  std::vector<QuotientGroup> quotients;
  ScanOptions opt;
};

Context make_context(const FiniteAbelianGroup& g, const ScanOptions& opt) {
  Context c;
  c.opt = opt;
  if (opt.subgroup_stats) {
    c.subgroups = enumerate_subgroups(g);
    for (const auto& h : c.subgroups) c.quotients.push_back(make_quotient(h));
  }
  return c;
}

template <class Ch>
PolarizationRecord make_record(const Ch& c, const BranchLabel& s, const Context& ctx) {
  PolarizationRecord r;
  r.branch = s;
  r.I = holevo_information(c);
  r.fd = fd_table(c);
  r.F = avg_fidelity(r.fd);
  r.Fmax = f_max(r.fd);
  r.per_subgroup.resize(ctx.subgroups.size());
  for (std::size_t i = 0; i < ctx.subgroups.size(); ++i) {
    const auto& h = ctx.subgroups[i];
    if (h.order() == 1) {
      r.per_subgroup[i] = {r.I, r.F};
    } else if (h.index() == 1) {
      r.per_subgroup[i] = {0.0, 0.0};
    } else {
      auto qc = quotient_channel(c, ctx.quotients[i]);
      r.per_subgroup[i] = {holevo_information(qc), avg_fidelity(fd_table(qc))};
    }
  }
  if (!ctx.subgroups.empty()) r.best_h = best_subgroup(ctx.subgroups, r.I, r.per_subgroup);
  return r;
}

template <class Ch>
void visit(const Ch& c, BranchLabel prefix, int n, const Caps& caps, const Context& ctx,
           std::vector<PolarizationRecord>& out, ErrorTrap& trap) {
  if (prefix.n() == n) {
    out[prefix.index()] = make_record(c, prefix, ctx);
    return;
  }
  BranchLabel lm = prefix, lp = prefix;
  lm.signs.push_back(Sign::Minus);
  lp.signs.push_back(Sign::Plus);
  // the parent is only needed until both children exist
  auto cm = std::make_shared<Ch>(minus_transform(c, caps));
  auto cp = std::make_shared<Ch>(plus_transform(c, caps));
#pragma omp task shared(out, ctx, caps, trap) firstprivate(cm, lm, n) if (n - prefix.n() > 1)
  trap.run([&] { visit(*cm, lm, n, caps, ctx, out, trap); });
#pragma omp task shared(out, ctx, caps, trap) firstprivate(cp, lp, n) if (n - prefix.n() > 1)
  trap.run([&] { visit(*cp, lp, n, caps, ctx, out, trap); });
#pragma omp taskwait
}

template <class Ch>
ScanResult scan_tree(const Ch& w, int n, const Caps& caps, const ScanOptions& opt) {
  ScanResult res;
  res.group = w.group();
  res.n = n;
  auto ctx = make_context(w.group(), opt);
  res.subgroups = ctx.subgroups;
  res.I_W = holevo_information(w);
  res.records.resize(std::size_t{1} << n);
  ErrorTrap trap;
#pragma omp parallel
#pragma omp single
  trap.run([&] { visit(w, BranchLabel{}, n, caps, ctx, res.records, trap); });
  trap.rethrow();
  return res;
}

template <class Ch>
ScanResult scan_serial(const Ch& w, int n, const Caps& caps, const ScanOptions& opt) {
  ScanResult res;
  res.group = w.group();
  res.n = n;
  auto ctx = make_context(w.group(), opt);
  res.subgroups = ctx.subgroups;
  res.I_W = holevo_information(w);
  for (const auto& s : branch_order(n)) res.records.push_back(make_record(synthesize(w, s, caps), s, ctx));
  return res;
}

}  // namespace

ScanResult polarization_scan(const CqChannel& w, int n, const Caps& caps, const ScanOptions& opt) {
  if (n < 0) throw StructuralError("depth must be >= 0");
  if (opt.allow_classical && w.is_diagonal()) {
    auto r = scan_tree(ClassicalChannel::from_cq(w), n, caps, opt);
    r.classical_path = true;
    return r;
  }
  precheck_dim(w, n, caps);
  return scan_tree(w, n, caps, opt);
}

ScanResult polarization_scan_serial(const CqChannel& w, int n, const Caps& caps, const ScanOptions& opt) {
  if (n < 0) throw StructuralError("depth must be >= 0");
  if (opt.allow_classical && w.is_diagonal()) {
    auto r = scan_serial(ClassicalChannel::from_cq(w), n, caps, opt);
    r.classical_path = true;
    return r;
  }
  precheck_dim(w, n, caps);
  return scan_serial(w, n, caps, opt);
}

namespace {

template <class Ch>
std::vector<double> quotient_infos(const Ch& c, const Context& ctx, double I) {
  std::vector<double> v(ctx.subgroups.size());
  for (std::size_t i = 0; i < ctx.subgroups.size(); ++i) {
    const auto& h = ctx.subgroups[i];
    if (h.order() == 1) v[i] = I;
    else if (h.index() == 1) v[i] = 0.0;
    else v[i] = holevo_information(quotient_channel(c, ctx.quotients[i]));
  }
  return v;
}

template <class Ch>
std::vector<ProcessStep> one_path(const Ch& w, int n, std::uint64_t seed, std::size_t path, const Caps& caps,
                                  const Context& ctx) {
  Rng rng = make_rng(seed, {0x9a7, path});
  std::vector<ProcessStep> steps;
  Ch cur = w;
  for (int m = 0; m <= n; ++m) {
    ProcessStep st;
    st.I = holevo_information(cur);
    st.Fmax = f_max(fd_table(cur));
    st.I_quot = quotient_infos(cur, ctx, st.I);
    if (m == n) {
      steps.push_back(std::move(st));
      break;
    }
    Ch cm = minus_transform(cur, caps);
    Ch cp = plus_transform(cur, caps);
    st.I_minus = holevo_information(cm);
    st.I_plus = holevo_information(cp);
    st.Fmax_plus = f_max(fd_table(cp));
    st.I_quot_minus = quotient_infos(cm, ctx, st.I_minus);
    st.I_quot_plus = quotient_infos(cp, ctx, st.I_plus);
    st.next = (rng() & 1) ? Sign::Plus : Sign::Minus;
    cur = (st.next == Sign::Plus) ? std::move(cp) : std::move(cm);
    steps.push_back(std::move(st));
  }
  return steps;
}

}  // namespace

ProcessSample process_sample(const CqChannel& w, int n, int trials, std::uint64_t seed, const Caps& caps) {
  if (trials < 1) throw StructuralError("trials must be >= 1");
  ProcessSample ps;
  auto ctx = make_context(w.group(), ScanOptions{});
  ps.subgroups = ctx.subgroups;
  ps.paths.resize(trials);
  const bool diag = w.is_diagonal();
  ClassicalChannel cw;
  if (diag) cw = ClassicalChannel::from_cq(w);
  else precheck_dim(w, n, caps);
  ErrorTrap trap;
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t)
    trap.run([&] { ps.paths[t] = diag ? one_path(cw, n, seed, t, caps, ctx) : one_path(w, n, seed, t, caps, ctx); });
  trap.rethrow();

  ps.mean_I.assign(n + 1, 0.0);
  ps.mean_Fmax.assign(n + 1, 0.0);
  for (const auto& p : ps.paths)
    for (int m = 0; m <= n; ++m) {
      ps.mean_I[m] += p[m].I / trials;
      ps.mean_Fmax[m] += p[m].Fmax / trials;
    }
  for (const auto& p : ps.paths)
    for (int m = 0; m < n; ++m) {
      const auto& st = p[m];
      ps.max_martingale_gap = std::max(ps.max_martingale_gap, std::abs(0.5 * (st.I_minus + st.I_plus) - st.I));
      for (std::size_t h = 0; h < st.I_quot.size(); ++h)
        ps.max_submartingale_deficit =
            std::max(ps.max_submartingale_deficit, 2 * st.I_quot[h] - st.I_quot_minus[h] - st.I_quot_plus[h]);
    }
  for (int m = 0; m < n; ++m) {
    double mean = 0.0, sq = 0.0;
    for (const auto& p : ps.paths) {
      double d = p[m + 1].I - p[m].I;
      mean += d;
      sq += d * d;
    }
    mean /= trials;
    double var = trials > 1 ? (sq - trials * mean * mean) / (trials - 1) : 0.0;
    double se = std::sqrt(std::max(var, 0.0) / trials);
    double z = se > 0 ? std::abs(mean) / se : (std::abs(mean) > 1e-12 ? 1e300 : 0.0);
    ps.martingale_z = std::max(ps.martingale_z, z);
  }
  return ps;
}

}  // namespace cqpolar
