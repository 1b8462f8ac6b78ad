#include "cqpolar/channel.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cqpolar/errors.hpp"
#include "cqpolar/parallel.hpp"

namespace cqpolar {

HybridState::HybridState(int dim, std::vector<Branch> branches) : dim_(dim) {
  std::sort(branches.begin(), branches.end(), [](const Branch& a, const Branch& b) { return a.label < b.label; });
  for (auto& b : branches) {
    if (b.factor.rows() != dim) throw StructuralError("branch dimension differs from state dimension");
    if (b.factor.cols() == 0) continue;
    if (!branches_.empty() && branches_.back().label == b.label) {
      Matrix& f = branches_.back().factor;
      Matrix g(dim, f.cols() + b.factor.cols());
      g << f, b.factor;
      f = compress_factor(g);
    } else {
      branches_.push_back(std::move(b));
    }
  }
}

HybridState HybridState::single(const DensityMatrix& rho) {
  return HybridState(rho.dim(), {Branch{{0}, psd_factor(rho.matrix())}});
}

HybridState HybridState::from_factor(Matrix factor, Label label) {
  const int d = static_cast<int>(factor.rows());
  return HybridState(d, {Branch{std::move(label), std::move(factor)}});
}

const Branch* HybridState::find(const Label& l) const {
  auto it = std::lower_bound(branches_.begin(), branches_.end(), l,
                             [](const Branch& b, const Label& x) { return b.label < x; });
  if (it == branches_.end() || it->label != l) return nullptr;
  return &*it;
}

double HybridState::total_weight() const {
  double t = 0.0;
  for (const auto& b : branches_) t += b.weight();
  return t;
}

DensityMatrix HybridState::state(std::size_t i) const {
  const auto& b = branches_.at(i);
  Matrix m = b.block();
  return DensityMatrix::from(m / m.trace().real());
}

Matrix HybridState::flatten(const std::vector<Label>& order) const {
  const Eigen::Index n = static_cast<Eigen::Index>(order.size()) * dim_;
  Matrix m = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < order.size(); ++j)
    if (const Branch* b = find(order[j])) m.block(j * dim_, j * dim_, dim_, dim_) = b->block();
  return m;
}

CqChannel::CqChannel(FiniteAbelianGroup g, int dim, std::vector<HybridState> outputs)
    : g_(std::move(g)), dim_(dim), outputs_(std::move(outputs)) {
  if (static_cast<int>(outputs_.size()) != g_.order()) throw StructuralError("channel needs one output per group element");
  for (const auto& o : outputs_)
    if (o.dim() != dim_) throw StructuralError("output dimension mismatch");
}

std::vector<Label> CqChannel::label_set() const {
  std::vector<Label> all;
  for (const auto& o : outputs_)
    for (const auto& b : o.branches()) all.push_back(b.label);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

std::size_t CqChannel::max_branches() const {
  std::size_t m = 0;
  for (const auto& o : outputs_) m = std::max(m, o.branches().size());
  return m;
}

bool CqChannel::is_diagonal(double tol) const {
  for (const auto& o : outputs_)
    for (const auto& b : o.branches()) {
      Matrix m = b.block();
      const double scale = std::max(m.trace().real(), 1e-300);
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
          if (i != j && std::abs(m(i, j)) > tol * scale) return false;
    }
  return true;
}

double hybrid_fidelity(const HybridState& a, const HybridState& b) {
  double f = 0.0;
  auto ia = a.branches().begin(), ea = a.branches().end();
  auto ib = b.branches().begin(), eb = b.branches().end();
  while (ia != ea && ib != eb) {
    if (ia->label < ib->label) {
      ++ia;
    } else if (ib->label < ia->label) {
      ++ib;
    } else {
      f += factor_fidelity(ia->factor, ib->factor);
      ++ia;
      ++ib;
    }
  }
  return f;
}

double hybrid_entropy(const HybridState& s) {
  double h = 0.0;
  for (const auto& b : s.branches()) h += factor_entropy(b.factor);
  return h;
}

namespace {

// Groups the branches of several states by label: for each label, the list of
// (state index, factor) pairs.
std::map<Label, std::vector<std::pair<std::size_t, const Matrix*>>> by_label(
    const std::vector<const HybridState*>& states) {
  std::map<Label, std::vector<std::pair<std::size_t, const Matrix*>>> m;
  for (std::size_t i = 0; i < states.size(); ++i)
    for (const auto& b : states[i]->branches()) m[b.label].emplace_back(i, &b.factor);
  return m;
}

Matrix concat_scaled(int dim, const std::vector<std::pair<std::size_t, const Matrix*>>& parts,
                     const std::vector<double>& weights) {
  Eigen::Index cols = 0;
  for (const auto& p : parts) cols += p.second->cols();
  Matrix f(dim, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    f.middleCols(c, p.second->cols()) = *p.second * std::sqrt(weights[p.first]);
    c += p.second->cols();
  }
  return f;
}

}  // namespace

HybridState mix(const std::vector<const HybridState*>& states, const std::vector<double>& weights) {
  if (states.empty()) throw StructuralError("mix of nothing");
  const int dim = states[0]->dim();
  std::vector<Branch> out;
  for (auto& [label, parts] : by_label(states)) out.push_back(Branch{label, compress_factor(concat_scaled(dim, parts, weights))});
  return HybridState(dim, std::move(out));
}

double holevo_information(const CqChannel& w) {
  const int q = w.q();
  std::vector<const HybridState*> st;
  for (const auto& o : w.outputs()) st.push_back(&o);
  std::vector<double> wts(q, 1.0 / q);
  auto groups = by_label(st);
  std::vector<const std::vector<std::pair<std::size_t, const Matrix*>>*> items;
  for (auto& kv : groups) items.push_back(&kv.second);
  std::vector<double> h_avg(items.size());
  ErrorTrap trap;
#pragma omp parallel for schedule(dynamic) if (items.size() > 8)
  for (std::size_t i = 0; i < items.size(); ++i)
    trap.run([&] { h_avg[i] = factor_entropy(concat_scaled(w.dim(), *items[i], wts)); });
  trap.rethrow();
  std::vector<double> h_x(q);
#pragma omp parallel for schedule(dynamic) if (w.max_branches() > 8)
  for (int x = 0; x < q; ++x) trap.run([&] { h_x[x] = hybrid_entropy(w.output(x)); });
  trap.rethrow();
  double avg = 0.0, cond = 0.0;
  for (double v : h_avg) avg += v;
  for (double v : h_x) cond += v;
  return avg - cond / q;
}

std::vector<double> pairwise_fidelity(const CqChannel& w) {
  const int q = w.q();
  std::vector<double> f(static_cast<std::size_t>(q) * q, 0.0);
  std::vector<std::pair<int, int>> pairs;
  for (int x = 0; x < q; ++x)
    for (int y = x + 1; y < q; ++y) pairs.emplace_back(x, y);
  ErrorTrap trap;
#pragma omp parallel for schedule(dynamic) if (pairs.size() > 1 && w.max_branches() * w.dim() > 64)
  for (std::size_t i = 0; i < pairs.size(); ++i)
    trap.run([&] {
      auto [x, y] = pairs[i];
      double v = std::min(1.0, hybrid_fidelity(w.output(x), w.output(y)));
      f[x * q + y] = v;
      f[y * q + x] = v;
    });
  trap.rethrow();
  for (int x = 0; x < q; ++x) f[x * q + x] = 1.0;
  return f;
}

FdTable fd_table_from_pairs(const FiniteAbelianGroup& g, const std::vector<double>& pairs) {
  const int q = g.order();
  FdTable t;
  t.values.assign(q, 0.0);
  for (int d = 0; d < q; ++d) {
    double s = 0.0;
    for (int x = 0; x < q; ++x) s += pairs[x * q + g.add(x, d)];
    t.values[d] = s / q;
  }
  t.values[0] = 1.0;
  return t;
}

double fd(const CqChannel& w, Elem d) {
  if (d == 0) return 1.0;
  double s = 0.0;
  for (int x = 0; x < w.q(); ++x) s += std::min(1.0, hybrid_fidelity(w.output(x), w.output(w.group().add(x, d))));
  return s / w.q();
}

FdTable fd_table(const CqChannel& w) { return fd_table_from_pairs(w.group(), pairwise_fidelity(w)); }

double avg_fidelity(const FdTable& t) {
  const int q = static_cast<int>(t.values.size());
  if (q <= 1) return 0.0;
  double s = 0.0;
  for (int d = 1; d < q; ++d) s += t.values[d];
  return s / (q - 1);
}

double f_max(const FdTable& t) {
  double m = 0.0;
  for (std::size_t d = 1; d < t.values.size(); ++d) m = std::max(m, t.values[d]);
  return m;
}

double avg_fidelity(const CqChannel& w) { return avg_fidelity(fd_table(w)); }
double f_max(const CqChannel& w) { return f_max(fd_table(w)); }

CqChannel quotient_channel(const CqChannel& w, const QuotientGroup& qg) {
  if (!(qg.subgroup.parent() == w.group())) throw StructuralError("subgroup belongs to a different group");
  std::vector<HybridState> out(qg.cosets.size());
  ErrorTrap trap;
#pragma omp parallel for schedule(dynamic) if (qg.cosets.size() > 1 && w.max_branches() > 8)
  for (std::size_t i = 0; i < qg.cosets.size(); ++i)
    trap.run([&] {
      const auto& c = qg.cosets[i];
      std::vector<const HybridState*> st;
      for (Elem x : c.members) st.push_back(&w.output(x));
      out[i] = mix(st, std::vector<double>(st.size(), 1.0 / static_cast<double>(st.size())));
    });
  trap.rethrow();
  return CqChannel(qg.group, w.dim(), std::move(out));
}

CqChannel quotient_channel(const CqChannel& w, const Subgroup& h) { return quotient_channel(w, make_quotient(h)); }

CqChannel restricted_quotient_channel(const CqChannel& w, const Subgroup& m, const Subgroup& h, const Coset& d) {
  if (!m.is_subset_of(h)) throw StructuralError("M is not a subgroup of H");
  if (!(h.parent() == w.group())) throw StructuralError("subgroup belongs to a different group");
  for (Elem x : d.members)
    if (!h.contains(w.group().sub(x, d.representative))) throw StructuralError("D is not a coset of H");
  if (static_cast<int>(d.members.size()) != h.order()) throw StructuralError("D is not a coset of H");
  // H/M as a group; coset C' of M in H is fed the states of rep(D) + C'.
  const auto& g = w.group();
  QuotientGroup full = make_quotient(m);
  std::vector<int> cos_ids;  // cosets of M inside H, in quotient order
  for (std::size_t i = 0; i < full.cosets.size(); ++i)
    if (h.contains(full.cosets[i].representative)) cos_ids.push_back(static_cast<int>(i));
  const int r = static_cast<int>(cos_ids.size());
  std::vector<int> pos(full.cosets.size(), -1);
  for (int i = 0; i < r; ++i) pos[cos_ids[i]] = i;
  std::vector<int> table(static_cast<std::size_t>(r) * r);
  std::vector<std::string> labels(r);
  for (int i = 0; i < r; ++i) {
    labels[i] = full.group.label(cos_ids[i]);
    for (int j = 0; j < r; ++j) table[i * r + j] = pos[full.group.add(cos_ids[i], cos_ids[j])];
  }
  auto hg = FiniteAbelianGroup::from_table(std::move(table), std::move(labels));
  std::vector<HybridState> out(r);
  for (int i = 0; i < r; ++i) {
    std::vector<const HybridState*> st;
    for (Elem x : full.cosets[cos_ids[i]].members) st.push_back(&w.output(g.add(d.representative, x)));
    out[i] = mix(st, std::vector<double>(st.size(), 1.0 / static_cast<double>(st.size())));
  }
  return CqChannel(hg, w.dim(), std::move(out));
}

NestedInformation nested_information(const CqChannel& w, const Subgroup& m, const Subgroup& h) {
  if (!m.is_subset_of(h)) throw StructuralError("M is not a subgroup of H");
  NestedInformation r;
  r.value = holevo_information(quotient_channel(w, m)) - holevo_information(quotient_channel(w, h));
  auto cos = quotient_cosets(h);
  double s = 0.0;
  for (const auto& d : cos) s += holevo_information(restricted_quotient_channel(w, m, h, d));
  r.decomposition = s / static_cast<double>(cos.size());
  return r;
}

double nested_fmax(const FdTable& t, const Subgroup& m, const Subgroup& h) {
  double v = 0.0;
  for (Elem d : h.elements())
    if (!m.contains(d)) v = std::max(v, t.values[d]);
  return v;
}

double nested_fmax(const CqChannel& w, const Subgroup& m, const Subgroup& h) {
  if (!m.is_subset_of(h)) throw StructuralError("M is not a subgroup of H");
  return nested_fmax(fd_table(w), m, h);
}

CqChannel flatten(const CqChannel& w) {
  auto labels = w.label_set();
  const int d = static_cast<int>(labels.size()) * w.dim();
  std::vector<HybridState> out;
  for (const auto& o : w.outputs()) out.push_back(HybridState::from_factor(psd_factor(o.flatten(labels))));
  return CqChannel(w.group(), d, std::move(out));
}

CqChannel channel_from_states(const FiniteAbelianGroup& g, const std::vector<DensityMatrix>& states) {
  if (static_cast<int>(states.size()) != g.order()) throw StructuralError("need one state per group element");
  std::vector<HybridState> out;
  for (const auto& s : states) {
    if (s.dim() != states[0].dim()) throw StructuralError("states of different dimension");
    out.push_back(HybridState::single(s));
  }
  return CqChannel(g, states.empty() ? 0 : states[0].dim(), std::move(out));
}

}  // namespace cqpolar
