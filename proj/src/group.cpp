#include "cqpolar/group.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "cqpolar/errors.hpp"
#include "cqpolar/rng.hpp"

namespace cqpolar {

namespace {

std::string residue_label(const std::vector<int>& r) {
  std::string s = "(";
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(r[i]);
  }
  return s + ")";
}

}  // namespace

FiniteAbelianGroup::FiniteAbelianGroup() : FiniteAbelianGroup(std::vector<int>{}) {}

FiniteAbelianGroup::FiniteAbelianGroup(std::vector<int> cyclic_orders) : orders_(std::move(cyclic_orders)) {
  long long q = 1;
  for (int n : orders_) {
    if (n < 1) throw StructuralError("cyclic order must be >= 1, got " + std::to_string(n));
    q *= n;
    if (q > (1 << 20)) throw CapacityError("group order exceeds 2^20");
  }
  order_ = static_cast<int>(q);
  const std::size_t k = orders_.size();
  std::vector<std::vector<int>> res(order_, std::vector<int>(k));
  for (int a = 0; a < order_; ++a) {
    int rem = a;
    for (std::size_t i = k; i-- > 0;) {
      res[a][i] = rem % orders_[i];
      rem /= orders_[i];
    }
  }
  auto idx = [&](const std::vector<int>& r) {
    int v = 0;
    for (std::size_t i = 0; i < k; ++i) v = v * orders_[i] + r[i];
    return v;
  };
  auto add = std::make_shared<std::vector<int>>(static_cast<std::size_t>(order_) * order_);
  auto neg = std::make_shared<std::vector<int>>(order_);
  auto labels = std::make_shared<std::vector<std::string>>(order_);
  std::vector<int> t(k);
  for (int a = 0; a < order_; ++a) {
    for (int b = 0; b < order_; ++b) {
      for (std::size_t i = 0; i < k; ++i) t[i] = (res[a][i] + res[b][i]) % orders_[i];
      (*add)[static_cast<std::size_t>(a) * order_ + b] = idx(t);
    }
    for (std::size_t i = 0; i < k; ++i) t[i] = (orders_[i] - res[a][i]) % orders_[i];
    (*neg)[a] = idx(t);
    (*labels)[a] = residue_label(res[a]);
  }
  add_tab_ = add;
  neg_tab_ = neg;
  labels_ = labels;
  bind();
}

FiniteAbelianGroup FiniteAbelianGroup::from_table(std::vector<int> add_table, std::vector<std::string> labels) {
  FiniteAbelianGroup g;
  const int q = static_cast<int>(labels.size());
  if (static_cast<int>(add_table.size()) != q * q) throw StructuralError("addition table has wrong size");
  g.orders_.clear();
  g.product_ = false;
  g.order_ = q;
  auto neg = std::make_shared<std::vector<int>>(q, -1);
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      if (add_table[a * q + b] == 0) (*neg)[a] = b;
  for (int a = 0; a < q; ++a)
    if ((*neg)[a] < 0) throw StructuralError("addition table has no inverse");
  g.add_tab_ = std::make_shared<std::vector<int>>(std::move(add_table));
  g.neg_tab_ = neg;
  g.labels_ = std::make_shared<std::vector<std::string>>(std::move(labels));
  g.bind();
  return g;
}

void FiniteAbelianGroup::bind() {
  add_ = add_tab_->data();
  neg_ = neg_tab_->data();
}

int FiniteAbelianGroup::order() const { return order_; }
const std::vector<int>& FiniteAbelianGroup::cyclic_orders() const { return orders_; }
bool FiniteAbelianGroup::is_product() const { return product_; }

Elem FiniteAbelianGroup::multiple(Elem a, int k) const {
  Elem r = 0;
  for (int i = 0; i < k; ++i) r = add(r, a);
  return r;
}

int FiniteAbelianGroup::element_order(Elem a) const {
  int n = 1;
  for (Elem x = a; x != 0; x = add(x, a)) ++n;
  return n;
}

GroupElement FiniteAbelianGroup::element(Elem a) const {
  if (!product_) throw StructuralError("residue vectors exist only for product groups");
  GroupElement g;
  g.residues.resize(orders_.size());
  int rem = a;
  for (std::size_t i = orders_.size(); i-- > 0;) {
    g.residues[i] = rem % orders_[i];
    rem /= orders_[i];
  }
  return g;
}

Elem FiniteAbelianGroup::index_of(const GroupElement& g) const {
  if (!product_) throw StructuralError("residue vectors exist only for product groups");
  if (g.residues.size() != orders_.size())
    throw StructuralError("element " + residue_label(g.residues) + " has wrong length for group");
  int v = 0;
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    if (g.residues[i] < 0 || g.residues[i] >= orders_[i])
      throw StructuralError("element " + residue_label(g.residues) + " is not reduced");
    v = v * orders_[i] + g.residues[i];
  }
  return v;
}

GroupElement FiniteAbelianGroup::add(const GroupElement& a, const GroupElement& b) const {
  return element(add(index_of(a), index_of(b)));
}

const std::string& FiniteAbelianGroup::label(Elem a) const { return (*labels_)[a]; }

Elem FiniteAbelianGroup::parse_label(const std::string& s) const {
  std::string t;
  for (char c : s)
    if (c != ' ') t += c;
  for (int a = 0; a < order_; ++a)
    if ((*labels_)[a] == t) return a;
  throw LoadError("unknown group element '" + s + "'");
}

bool FiniteAbelianGroup::operator==(const FiniteAbelianGroup& o) const {
  if (add_tab_ == o.add_tab_) return true;
  return order_ == o.order_ && product_ == o.product_ && orders_ == o.orders_ && *add_tab_ == *o.add_tab_;
}

Subgroup::Subgroup(FiniteAbelianGroup g, std::vector<Elem> elements) : g_(std::move(g)) {
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  member_.assign(g_.order(), 0);
  for (Elem a : elements) {
    if (a < 0 || a >= g_.order()) throw StructuralError("subgroup element out of range");
    member_[a] = 1;
  }
  if (elements.empty() || elements.front() != 0) throw StructuralError("subgroup must contain 0");
  for (Elem a : elements)
    for (Elem b : elements)
      if (!member_[g_.add(a, b)]) throw StructuralError("element set is not closed under addition");
  elems_ = std::move(elements);
}

bool Subgroup::is_subset_of(const Subgroup& o) const {
  if (!(g_ == o.g_)) return false;
  for (Elem a : elems_)
    if (!o.contains(a)) return false;
  return true;
}

std::string Subgroup::to_string() const {
  std::string s = "{";
  for (std::size_t i = 0; i < elems_.size(); ++i) {
    if (i) s += ";";
    s += g_.label(elems_[i]);
  }
  return s + "}";
}

bool Subgroup::operator<(const Subgroup& o) const {
  if (elems_.size() != o.elems_.size()) return elems_.size() < o.elems_.size();
  return elems_ < o.elems_;
}

Subgroup trivial_subgroup(const FiniteAbelianGroup& g) { return Subgroup(g, {0}); }

Subgroup full_subgroup(const FiniteAbelianGroup& g) {
  std::vector<Elem> all(g.order());
  std::iota(all.begin(), all.end(), 0);
  return Subgroup(g, all);
}

Subgroup generated_subgroup(const FiniteAbelianGroup& g, Elem d) {
  std::vector<Elem> e{0};
  for (Elem x = d; x != 0; x = g.add(x, d)) e.push_back(x);
  return Subgroup(g, e);
}

namespace {

std::vector<Elem> sum_set(const FiniteAbelianGroup& g, const std::vector<Elem>& a, const std::vector<Elem>& b) {
  std::vector<char> seen(g.order(), 0);
  std::vector<Elem> out;
  for (Elem x : a)
    for (Elem y : b) {
      Elem z = g.add(x, y);
      if (!seen[z]) {
        seen[z] = 1;
        out.push_back(z);
      }
    }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Subgroup generated_subgroup(const FiniteAbelianGroup& g, const std::vector<Elem>& gens) {
  std::vector<Elem> cur{0};
  for (Elem d : gens) cur = sum_set(g, cur, generated_subgroup(g, d).elements());
  return Subgroup(g, cur);
}

Subgroup subgroup_sum(const Subgroup& a, const Subgroup& b) {
  if (!(a.parent() == b.parent())) throw StructuralError("subgroups of different groups");
  return Subgroup(a.parent(), sum_set(a.parent(), a.elements(), b.elements()));
}

Subgroup subgroup_intersection(const Subgroup& a, const Subgroup& b) {
  if (!(a.parent() == b.parent())) throw StructuralError("subgroups of different groups");
  std::vector<Elem> e;
  for (Elem x : a.elements())
    if (b.contains(x)) e.push_back(x);
  return Subgroup(a.parent(), e);
}

namespace {

// Every subgroup of a finite Abelian group is a sum of cyclic subgroups, so
// closing the cyclic ones under pairwise sums reaches the whole lattice.
std::vector<Subgroup> close_lattice(const FiniteAbelianGroup& g, const std::vector<Elem>& pool) {
  std::set<std::vector<Elem>> seen;
  std::vector<std::vector<Elem>> cyclic;
  for (Elem d : pool) {
    auto e = generated_subgroup(g, d).elements();
    if (seen.insert(e).second) cyclic.push_back(e);
  }
  std::vector<std::vector<Elem>> all(seen.begin(), seen.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (const auto& c : cyclic) {
      auto s = sum_set(g, all[i], c);
      if (seen.insert(s).second) all.push_back(s);
    }
  }
  std::vector<Subgroup> out;
  out.reserve(all.size());
  for (auto& e : all) out.emplace_back(g, std::move(e));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<Subgroup> enumerate_subgroups(const FiniteAbelianGroup& g, int cap) {
  if (g.order() > cap)
    throw CapacityError("group order " + std::to_string(g.order()) + " exceeds cap " + std::to_string(cap));
  std::vector<Elem> pool(g.order());
  std::iota(pool.begin(), pool.end(), 0);
  return close_lattice(g, pool);
}

std::vector<Subgroup> subgroups_within(const Subgroup& h) { return close_lattice(h.parent(), h.elements()); }

bool is_prime(int n) {
  if (n < 2) return false;
  for (int p = 2; p * p <= n; ++p)
    if (n % p == 0) return false;
  return true;
}

std::vector<Subgroup> maximal_subgroups(const Subgroup& h) {
  std::vector<Subgroup> out;
  if (h.order() <= 1) return out;
  for (auto& m : subgroups_within(h))
    if (is_prime(h.order() / m.order())) out.push_back(m);
  return out;
}

std::vector<Coset> quotient_cosets(const Subgroup& h) {
  const auto& g = h.parent();
  std::vector<char> done(g.order(), 0);
  std::vector<Coset> out;
  for (Elem a = 0; a < g.order(); ++a) {
    if (done[a]) continue;
    Coset c;
    c.representative = a;  // first unseen index is the coset minimum
    for (Elem m : h.elements()) {
      Elem x = g.add(a, m);
      done[x] = 1;
      c.members.push_back(x);
    }
    std::sort(c.members.begin(), c.members.end());
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Coset> refine(const Coset& d, const Subgroup& m) {
  const auto& g = m.parent();
  std::vector<char> in_d(g.order(), 0);
  for (Elem x : d.members) in_d[x] = 1;
  for (Elem x : m.elements())
    if (!in_d[g.add(d.representative, x)]) throw StructuralError("refine: M is not contained in the subgroup of D");
  std::vector<char> done(g.order(), 0);
  std::vector<Coset> out;
  for (Elem a : d.members) {
    if (done[a]) continue;
    Coset c;
    c.representative = a;
    for (Elem x : m.elements()) {
      Elem y = g.add(a, x);
      done[y] = 1;
      c.members.push_back(y);
    }
    std::sort(c.members.begin(), c.members.end());
    out.push_back(std::move(c));
  }
  return out;
}

QuotientGroup make_quotient(const Subgroup& h) {
  QuotientGroup q;
  q.subgroup = h;
  q.cosets = quotient_cosets(h);
  const auto& g = h.parent();
  q.coset_of.assign(g.order(), -1);
  for (std::size_t i = 0; i < q.cosets.size(); ++i)
    for (Elem x : q.cosets[i].members) q.coset_of[x] = static_cast<int>(i);
  const int m = static_cast<int>(q.cosets.size());
  std::vector<int> table(static_cast<std::size_t>(m) * m);
  std::vector<std::string> labels(m);
  for (int i = 0; i < m; ++i) {
    labels[i] = g.label(q.cosets[i].representative);
    for (int j = 0; j < m; ++j)
      table[i * m + j] = q.coset_of[g.add(q.cosets[i].representative, q.cosets[j].representative)];
  }
  q.group = FiniteAbelianGroup::from_table(std::move(table), std::move(labels));
  return q;
}

SectionMap random_section_map(const QuotientGroup& q, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x5ec7});
  SectionMap f;
  for (const auto& c : q.cosets) f.table.push_back(c.members[uniform_int(rng, static_cast<int>(c.members.size()))]);
  return f;
}

SectionMap zero_section_map(const QuotientGroup& q) {
  SectionMap f;
  for (const auto& c : q.cosets) f.table.push_back(c.representative);
  return f;
}

bool is_valid_section(const QuotientGroup& q, const SectionMap& f) {
  if (f.table.size() != q.cosets.size()) return false;
  for (std::size_t i = 0; i < f.table.size(); ++i) {
    Elem x = f.table[i];
    if (x < 0 || x >= static_cast<int>(q.coset_of.size()) || q.coset_of[x] != static_cast<int>(i)) return false;
  }
  return true;
}

std::uint64_t section_map_count(const Subgroup& h) {
  std::uint64_t n = 1;
  for (int i = 0; i < h.index(); ++i) n *= static_cast<std::uint64_t>(h.order());
  return n;
}

}  // namespace cqpolar
