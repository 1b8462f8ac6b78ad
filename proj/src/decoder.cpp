#include "cqpolar/decoder.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cqpolar/errors.hpp"
#include "cqpolar/parallel.hpp"

namespace cqpolar {

namespace {

constexpr double kCollapse = 1e-300;
constexpr double kRelTol = 1e-12;

// Every word in G^len, first coordinate most significant.
template <class F>
void for_each_word(int q, std::size_t len, F&& f) {
  std::vector<Elem> w(len, 0);
  while (true) {
    f(w);
    std::size_t i = len;
    while (i > 0 && ++w[i - 1] == q) w[--i] = 0;
    if (i == 0) break;
  }
}

int pick(const std::vector<double>& dist, Rng& rng) {
  double r = uniform01(rng), acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    acc += dist[i];
    if (r < acc) return static_cast<int>(i);
  }
  // rounding left r above the total; take the last nonzero entry
  for (std::size_t i = dist.size(); i > 0; --i)
    if (dist[i - 1] > 0) return static_cast<int>(i - 1);
  return 0;
}

void check_group(const CqChannel& w, const CodePlan& plan) {
  if (w.group().cyclic_orders() != plan.group.cyclic_orders())
    throw StructuralError("plan and channel are over different groups");
  if (plan.branches.empty()) throw StructuralError("empty plan");
}

}  // namespace

// ---------------------------------------------------------------------------
// quantum decoder

ScDecoder::ScDecoder(const CqChannel& w, const CodePlan& plan, const Caps& caps) : plan_(plan), g_(w.group()) {
  check_group(w, plan);
  CqChannel f = flatten(w);
  base_dim_ = f.dim();
  double d = 1.0, words = 1.0;
  for (int i = 0; i < N(); ++i) {
    d *= base_dim_;
    words *= g_.order();
  }
  if (d > static_cast<double>(caps.dim_cap))
    throw CapacityError("joint output dimension " + std::to_string(static_cast<long long>(d)) + " exceeds the cap of " +
                        std::to_string(caps.dim_cap));
  if (words > static_cast<double>(caps.branch_cap))
    throw CapacityError("q^N = " + std::to_string(static_cast<long long>(words)) + " messages exceed the cap of " +
                        std::to_string(caps.branch_cap));
  dim_ = static_cast<int>(d);
  for (Elem x = 0; x < g_.order(); ++x) {
    factor_.push_back(f.output(x).branches()[0].factor);
    dense_.push_back(factor_.back() * factor_.back().adjoint());
  }
}

std::shared_ptr<const ScDecoder::Step> ScDecoder::build(std::size_t pos, const std::vector<Elem>& prefix) const {
  auto st = std::make_shared<Step>();
  const auto& bp = plan_.branches[pos];
  st->m = bp.cosets();
  if (st->m == 1) return st;
  const int q = g_.order();
  const std::size_t tail = N() - pos - 1;
  double weight = 1.0;
  for (std::size_t i = pos; i < static_cast<std::size_t>(N()); ++i) weight /= q;

  // every codeword consistent with the prefix, grouped by coset of u^pos
  std::vector<std::vector<std::vector<Elem>>> xs(st->m);
  std::size_t cols = 0;
  std::vector<Elem> u(prefix);
  u.resize(N());
  for (Elem a = 0; a < q; ++a) {
    u[pos] = a;
    for_each_word(q, tail, [&](const std::vector<Elem>& t) {
      std::copy(t.begin(), t.end(), u.begin() + pos + 1);
      auto x = encode(g_, u);
      std::size_t c = 1;
      for (Elem xi : x) c *= factor_[xi].cols();
      cols += c;
      xs[bp.quotient.coset_of[a]].push_back(std::move(x));
    });
  }

  // S's support, and U^dag w_c U for each coset
  std::vector<Matrix> proj(st->m);
  RVector lam;
  if (cols <= static_cast<std::size_t>(dim_)) {
    // thin: work through the Gram matrix of the stacked factors
    std::vector<Matrix> fc(st->m);
    Matrix all(dim_, cols);
    Eigen::Index at = 0;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> span(st->m);
    for (int c = 0; c < st->m; ++c) {
      const Eigen::Index start = at;
      for (const auto& x : xs[c]) {
        Matrix k = factor_[x[0]];
        for (std::size_t i = 1; i < x.size(); ++i) k = kron(k, factor_[x[i]]);
        all.middleCols(at, k.cols()) = std::sqrt(weight) * k;
        at += k.cols();
      }
      span[c] = {start, at - start};
    }
    auto e = hermitian_eig(all.adjoint() * all);
    const double cut = kRelTol * std::max(e.values.maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < e.values.size(); ++i)
      if (e.values(i) > cut) keep.push_back(i);
    lam.resize(keep.size());
    Matrix q(e.vectors.rows(), keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) {
      lam(j) = e.values(keep[j]);
      q.col(j) = e.vectors.col(keep[j]) / std::sqrt(lam(j));
    }
    st->U = all * q;
    for (int c = 0; c < st->m; ++c) {
      Matrix t = st->U.adjoint() * all.middleCols(span[c].first, span[c].second);
      proj[c] = t * t.adjoint();
    }
  } else {
    std::vector<Matrix> wc(st->m, Matrix::Zero(dim_, dim_));
    Matrix s = Matrix::Zero(dim_, dim_);
    for (int c = 0; c < st->m; ++c) {
      for (const auto& x : xs[c]) {
        Matrix k = dense_[x[0]];
        for (std::size_t i = 1; i < x.size(); ++i) k = kron(k, dense_[x[i]]);
        wc[c] += weight * k;
      }
      s += wc[c];
    }
    auto e = hermitian_eig(s);
    const double cut = kRelTol * std::max(e.values.maxCoeff(), 0.0);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < e.values.size(); ++i)
      if (e.values(i) > cut) keep.push_back(i);
    lam.resize(keep.size());
    st->U.resize(dim_, keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) {
      lam(j) = e.values(keep[j]);
      st->U.col(j) = e.vectors.col(keep[j]);
    }
    for (int c = 0; c < st->m; ++c) proj[c] = st->U.adjoint() * wc[c] * st->U;
  }

  const RVector is = lam.cwiseSqrt().cwiseInverse();
  st->success = 0.0;
  for (int c = 0; c < st->m; ++c) {
    Matrix a = is.asDiagonal() * proj[c] * is.asDiagonal();
    // Tr(E_c w_c) = Tr(A_c U^dag w_c U); w_c has no weight off the support
    st->success += (a * proj[c]).trace().real();
    st->sqrtA.push_back(psd_sqrt(a));
  }
  return st;
}

std::shared_ptr<const ScDecoder::Step> ScDecoder::step(std::size_t pos, const std::vector<Elem>& prefix) const {
  if (prefix.size() != pos) throw std::invalid_argument("prefix length must equal the step index");
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = cache_.find(prefix);
    if (it != cache_.end()) return it->second;
  }
  // built outside the lock; two threads may race to the same key, both get
  // identical results and the first insert wins
  auto st = build(pos, prefix);
  std::lock_guard<std::mutex> lk(mu_);
  return cache_.emplace(prefix, std::move(st)).first->second;
}

Vector ScDecoder::apply(const Step& st, int c, const Vector& v) const {
  if (st.m == 1) return v;
  Vector t = st.U.adjoint() * v;
  return st.U * (st.sqrtA[c] * t) + (v - st.U * t) / std::sqrt(double(st.m));
}

Povm ScDecoder::step_povm(std::size_t pos, const std::vector<Elem>& prefix) const {
  if (pos >= static_cast<std::size_t>(N())) throw std::invalid_argument("step index out of range");
  auto st = step(pos, prefix);
  Povm p;
  if (st->m == 1) {
    p.effects.push_back(Matrix::Identity(dim_, dim_));
    return p;
  }
  Matrix rest = (Matrix::Identity(dim_, dim_) - st->U * st->U.adjoint()) / double(st->m);
  for (const auto& s : st->sqrtA) p.effects.push_back(st->U * s * s * st->U.adjoint() + rest);
  return p;
}

double ScDecoder::exact_step_error(std::size_t pos) const {
  if (pos >= static_cast<std::size_t>(N())) throw std::invalid_argument("step index out of range");
  if (plan_.branches[pos].cosets() == 1) return 0.0;
  double s = 0.0;
  std::size_t count = 0;
  for_each_word(g_.order(), pos, [&](const std::vector<Elem>& pre) {
    s += step(pos, pre)->success;
    ++count;
  });
  return 1.0 - s / count;
}

Vector ScDecoder::sample_output(const std::vector<Elem>& x, Rng& rng) const {
  if (static_cast<int>(x.size()) != N()) throw std::invalid_argument("codeword length differs from N");
  Vector psi;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Matrix& f = factor_[x[i]];
    std::vector<double> w(f.cols());
    for (Eigen::Index j = 0; j < f.cols(); ++j) w[j] = f.col(j).squaredNorm();
    const Eigen::Index j = pick(w, rng);
    Vector col = f.col(j) / f.col(j).norm();
    psi = i == 0 ? col : Vector(kron(psi, col));
  }
  return psi;
}

Vector ScDecoder::basis_output(const std::vector<int>& y) const {
  if (static_cast<int>(y.size()) != N()) throw std::invalid_argument("output length differs from N");
  std::size_t idx = 0;
  for (int yi : y) {
    if (yi < 0 || yi >= base_dim_) throw std::invalid_argument("output symbol out of range");
    idx = idx * base_dim_ + yi;
  }
  Vector v = Vector::Zero(dim_);
  v(idx) = 1.0;
  return v;
}

DecodeTrace ScDecoder::decode(const Vector& psi, const std::vector<SectionMap>& sections, std::uint64_t seed,
                              const std::vector<Elem>* truth, const std::vector<int>* forced) const {
  if (psi.size() != dim_) throw std::invalid_argument("received state has the wrong dimension");
  if (static_cast<int>(sections.size()) != N()) throw std::invalid_argument("one section map per branch needed");
  const double nrm = psi.norm();
  if (!(nrm > 0)) throw std::invalid_argument("received state is zero");
  Rng rng = make_rng(seed);
  DecodeTrace tr;
  Vector v = psi / nrm;
  std::vector<Elem> prefix;
  double survival = 1.0;
  for (int pos = 0; pos < N(); ++pos) {
    const auto& bp = plan_.branches[pos];
    DecodeStep ds;
    ds.branch = bp.branch;
    if (bp.frozen()) {
      ds.dist = {1.0};
    } else {
      auto st = step(pos, prefix);
      std::vector<Vector> out;
      double tot = 0.0;
      for (int c = 0; c < st->m; ++c) {
        out.push_back(apply(*st, c, v));
        ds.dist.push_back(out.back().squaredNorm());
        tot += ds.dist.back();
      }
      for (double& p : ds.dist) p /= tot;
      ds.decoded = forced ? (*forced)[pos] : pick(ds.dist, rng);
      ds.prob = ds.dist[ds.decoded];
      survival *= ds.prob;
      if (ds.prob > 0) v = out[ds.decoded] / std::sqrt(ds.prob * tot);
    }
    ds.element = sections[pos].table.at(ds.decoded);
    ds.survival = survival;
    tr.estimate.symbols.push_back(ds.decoded);
    prefix.push_back(ds.element);
    tr.steps.push_back(std::move(ds));
    if (survival < kCollapse) {
      tr.collapsed = true;
      break;
    }
  }
  if (truth) {
    if (static_cast<int>(truth->size()) != N()) throw std::invalid_argument("true message has the wrong length");
    const Vector p0 = psi / nrm;
    Vector vt = p0;
    double miss = 0.0;
    std::vector<Elem> pre;
    for (int pos = 0; pos < N(); ++pos) {
      const auto& bp = plan_.branches[pos];
      double e = 0.0;
      if (!bp.frozen()) {
        auto st = step(pos, pre);
        const int c = bp.quotient.coset_of[(*truth)[pos]];
        e = std::max(0.0, 1.0 - apply(*st, c, p0).squaredNorm());
        vt = apply(*st, c, vt);
      }
      tr.true_step_error.push_back(e);
      miss += e;
      pre.push_back((*truth)[pos]);
    }
    tr.true_survival = vt.squaredNorm();
    tr.union_bound = 2.0 * std::sqrt(double(N())) * std::sqrt(miss);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// classical fast path

ClassicalScDecoder::ClassicalScDecoder(const CqChannel& w, const CodePlan& plan) : plan_(plan), g_(w.group()) {
  check_group(w, plan);
  CqChannel f = flatten(w);
  if (!f.is_diagonal(1e-12)) throw StructuralError("classical decoder needs a diagonal channel");
  for (Elem x = 0; x < g_.order(); ++x) {
    Matrix m = f.output(x).branches()[0].block();
    std::vector<double> p(f.dim());
    for (int y = 0; y < f.dim(); ++y) p[y] = std::max(0.0, m(y, y).real());
    lik_.push_back(std::move(p));
  }
}

std::vector<int> ClassicalScDecoder::sample_output(const std::vector<Elem>& x, Rng& rng) const {
  std::vector<int> y;
  for (Elem xi : x) y.push_back(pick(lik_[xi], rng));
  return y;
}

std::vector<Elem> ClassicalScDecoder::recurse(const Table& L, std::size_t base, const std::vector<SectionMap>& sections,
                                              Rng& rng, const std::vector<int>* forced, DecodeTrace& tr) const {
  const std::size_t M = L.size();
  const int q = g_.order();
  if (M == 1) {
    const auto& bp = plan_.branches[base];
    DecodeStep ds;
    ds.branch = bp.branch;
    ds.dist.assign(bp.cosets(), 0.0);
    double tot = 0.0;
    for (Elem u = 0; u < q; ++u) {
      ds.dist[bp.quotient.coset_of[u]] += L[0][u];
      tot += L[0][u];
    }
    if (tot > 0)
      for (double& p : ds.dist) p /= tot;
    if (!bp.frozen()) {
      ds.decoded = forced ? (*forced)[base] : pick(ds.dist, rng);
      ds.prob = ds.dist[ds.decoded];
    }
    const double prev = tr.steps.empty() ? 1.0 : tr.steps.back().survival;
    ds.survival = prev * ds.prob;
    if (ds.survival < kCollapse) tr.collapsed = true;
    ds.element = sections[base].table.at(ds.decoded);
    tr.estimate.symbols.push_back(ds.decoded);
    tr.steps.push_back(ds);
    return {ds.element};
  }
  const std::size_t h = M / 2;
  auto normalise = [](std::vector<double>& r) {
    double s = 0.0;
    for (double v : r) s += v;
    if (s > 0)
      for (double& v : r) v /= s;
  };
  // first half: the channels seen by the minus-side inputs, partner uniform
  Table lm(h, std::vector<double>(q, 0.0));
  for (std::size_t a = 0; a < h; ++a) {
    for (Elem v = 0; v < q; ++v)
      for (Elem w = 0; w < q; ++w) lm[a][v] += L[2 * a][g_.add(v, w)] * L[2 * a + 1][w];
    normalise(lm[a]);
  }
  auto xv = recurse(lm, base, sections, rng, forced, tr);
  Table lp(h, std::vector<double>(q, 0.0));
  for (std::size_t a = 0; a < h; ++a) {
    for (Elem w = 0; w < q; ++w) lp[a][w] = L[2 * a][g_.add(xv[a], w)] * L[2 * a + 1][w];
    normalise(lp[a]);
  }
  auto xw = recurse(lp, base + h, sections, rng, forced, tr);
  std::vector<Elem> x(M);
  for (std::size_t a = 0; a < h; ++a) {
    x[2 * a] = g_.add(xv[a], xw[a]);
    x[2 * a + 1] = xw[a];
  }
  return x;
}

DecodeTrace ClassicalScDecoder::decode(const std::vector<int>& y, const std::vector<SectionMap>& sections,
                                       std::uint64_t seed, const std::vector<Elem>* truth,
                                       const std::vector<int>* forced) const {
  if (static_cast<int>(y.size()) != N()) throw std::invalid_argument("output length differs from N");
  if (static_cast<int>(sections.size()) != N()) throw std::invalid_argument("one section map per branch needed");
  Table L(N(), std::vector<double>(g_.order()));
  for (int a = 0; a < N(); ++a)
    for (Elem x = 0; x < g_.order(); ++x) {
      if (y[a] < 0 || y[a] >= outputs()) throw std::invalid_argument("output symbol out of range");
      L[a][x] = lik_[x][y[a]];
    }
  Rng rng = make_rng(seed);
  DecodeTrace tr;
  recurse(L, 0, sections, rng, forced, tr);
  if (truth) {
    // rerun along the transmitted symbols, with sections that lift to them
    std::vector<int> cos;
    std::vector<SectionMap> secs = sections;
    for (int pos = 0; pos < N(); ++pos) {
      const auto& bp = plan_.branches[pos];
      const int c = bp.quotient.coset_of[(*truth)[pos]];
      cos.push_back(c);
      secs[pos].table[c] = (*truth)[pos];
    }
    DecodeTrace t;
    recurse(L, 0, secs, rng, &cos, t);
    double miss = 0.0, surv = 1.0;
    for (int pos = 0; pos < N(); ++pos) {
      const double p = t.steps[pos].dist[cos[pos]];
      tr.true_step_error.push_back(std::max(0.0, 1.0 - p));
      miss += tr.true_step_error.back();
      surv *= p;
    }
    tr.true_survival = surv;
    tr.union_bound = 2.0 * std::sqrt(double(N())) * std::sqrt(miss);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// experiments

Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double p = double(k) / n, z2 = z * z, den = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / den;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double wilson_sigma(std::uint64_t k, std::uint64_t n) {
  if (n == 0) return 0.5;
  const double p = double(k) / n, den = 1.0 + 1.0 / n;
  return std::sqrt(p * (1 - p) / n + 1.0 / (4.0 * n * n)) / den;
}

namespace {

struct TrialOut {
  bool error = false, collapsed = false;
  std::vector<double> steps;
  double union_margin = 0.0;
};

ExperimentResult run_experiment(const CqChannel& w, const CodePlan& plan, const ExperimentOptions& opt,
                                bool parallel) {
  if (opt.trials < 1) throw std::invalid_argument("trials must be at least 1");
  check_group(w, plan);
  bool classical = opt.path == DecoderPath::Classical;
  if (opt.path == DecoderPath::Auto) classical = flatten(w).is_diagonal(1e-12);
  std::unique_ptr<ScDecoder> qd;
  std::unique_ptr<ClassicalScDecoder> cd;
  if (classical)
    cd = std::make_unique<ClassicalScDecoder>(w, plan);
  else
    qd = std::make_unique<ScDecoder>(w, plan, opt.caps);
  const int N = plan.N();
  std::vector<TrialOut> outs(opt.trials);

  ErrorTrap trap;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int t = 0; t < opt.trials; ++t) trap.run([&] {
    Rng rng = make_rng(opt.seed, {static_cast<std::uint64_t>(t)});
    std::vector<SectionMap> secs;
    if (opt.fixed_sections)
      secs = plan.sections();
    else
      for (const auto& b : plan.branches) secs.push_back(random_section_map(b.quotient, rng()));
    const MessageVector m = random_message(plan, rng);
    const auto u = lift(plan, m, secs);
    const auto x = encode(plan.group, u);
    DecodeTrace tr;
    if (classical) {
      auto y = cd->sample_output(x, rng);
      tr = cd->decode(y, secs, rng(), &u);
    } else {
      auto psi = qd->sample_output(x, rng);
      tr = qd->decode(psi, secs, rng(), &u);
    }
    auto& o = outs[t];
    o.collapsed = tr.collapsed;
    o.error = tr.collapsed || tr.estimate.symbols != m.symbols;
    o.steps = tr.true_step_error;
    o.union_margin = (1.0 - tr.true_survival) - tr.union_bound;
  });
  trap.rethrow();

  ExperimentResult r;
  r.path = classical ? "classical" : "quantum";
  r.trials = opt.trials;
  r.bound = plan.bound;
  r.step_error.assign(N, 0.0);
  r.worst_union_margin = -INFINITY;
  for (const auto& o : outs) {
    r.errors += o.error;
    r.collapses += o.collapsed;
    for (int i = 0; i < N; ++i) r.step_error[i] += o.steps[i] / opt.trials;
    r.union_bound_violations += o.union_margin > 1e-9;
    r.worst_union_margin = std::max(r.worst_union_margin, o.union_margin);
  }
  for (const auto& b : plan.branches) r.step_bound.push_back((b.cosets() - 1) * b.F_H);
  r.error_rate = double(r.errors) / opt.trials;
  r.ci = wilson_interval(r.errors, opt.trials, 1.96);
  r.sigma = wilson_sigma(r.errors, opt.trials);
  return r;
}

}  // namespace

ExperimentResult error_experiment(const CqChannel& w, const CodePlan& plan, const ExperimentOptions& opt) {
  return run_experiment(w, plan, opt, true);
}

ExperimentResult error_experiment_serial(const CqChannel& w, const CodePlan& plan, const ExperimentOptions& opt) {
  return run_experiment(w, plan, opt, false);
}

nlohmann::json experiment_to_json(const ExperimentResult& r, const CodePlan& plan) {
  nlohmann::json j;
  j["path"] = r.path;
  j["trials"] = r.trials;
  j["errors"] = r.errors;
  j["collapses"] = r.collapses;
  j["error_rate"] = r.error_rate;
  j["ci95"] = {r.ci.low, r.ci.high};
  j["sigma"] = r.sigma;
  j["bound"] = r.bound;
  j["within_bound"] = r.error_rate <= r.bound + 3 * r.sigma;
  j["union_bound_violations"] = r.union_bound_violations;
  j["worst_union_margin"] = r.worst_union_margin;
  auto& s = j["steps"] = nlohmann::json::array();
  for (int i = 0; i < plan.N(); ++i)
    s.push_back({{"branch", plan.branches[i].branch.to_string()},
                 {"cosets", plan.branches[i].cosets()},
                 {"step_error", r.step_error[i]},
                 {"step_bound", r.step_bound[i]}});
  return j;
}

std::string step_profile_csv(const ExperimentResult& r, const CodePlan& plan) {
  std::ostringstream os;
  os.precision(17);
  os << "branch,cosets,step_error,step_bound\n";
  for (int i = 0; i < plan.N(); ++i)
    os << plan.branches[i].branch.to_string() << ',' << plan.branches[i].cosets() << ',' << r.step_error[i] << ','
       << r.step_bound[i] << '\n';
  return os.str();
}

}  // namespace cqpolar
