#pragma once
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace cqpolar {

// Elements are addressed by index; for product groups the index is the
// mixed-radix value of the residue vector, first factor most significant,
// so index order is lexicographic residue order.
using Elem = int;

struct GroupElement {
  std::vector<int> residues;
  bool operator==(const GroupElement&) const = default;
};

class FiniteAbelianGroup {
 public:
  FiniteAbelianGroup();  // trivial group
  explicit FiniteAbelianGroup(std::vector<int> cyclic_orders);

  // Group given by an explicit addition table; used for quotients.
  static FiniteAbelianGroup from_table(std::vector<int> add_table, std::vector<std::string> labels);

  int order() const;
  const std::vector<int>& cyclic_orders() const;
  bool is_product() const;

  Elem add(Elem a, Elem b) const { return add_[static_cast<std::size_t>(a) * order_ + b]; }
  Elem neg(Elem a) const { return neg_[a]; }
  Elem sub(Elem a, Elem b) const { return add(a, neg(b)); }
  Elem zero() const { return 0; }
  Elem multiple(Elem a, int k) const;
  int element_order(Elem a) const;

  GroupElement add(const GroupElement& a, const GroupElement& b) const;
  GroupElement element(Elem a) const;
  Elem index_of(const GroupElement& g) const;

  const std::string& label(Elem a) const;
  Elem parse_label(const std::string& s) const;

  bool operator==(const FiniteAbelianGroup& o) const;
  bool operator!=(const FiniteAbelianGroup& o) const { return !(*this == o); }

 private:
  std::vector<int> orders_;
  bool product_ = true;
  int order_ = 1;
  // Shared immutable tables: copies of a group are cheap.
  std::shared_ptr<const std::vector<int>> add_tab_;
  std::shared_ptr<const std::vector<int>> neg_tab_;
  std::shared_ptr<const std::vector<std::string>> labels_;
  const int* add_ = nullptr;
  const int* neg_ = nullptr;
  void bind();
};

class Subgroup {
 public:
  Subgroup() = default;
  // Validates closure; elements may be given in any order.
  Subgroup(FiniteAbelianGroup g, std::vector<Elem> elements);

  const FiniteAbelianGroup& parent() const { return g_; }
  const std::vector<Elem>& elements() const { return elems_; }
  int order() const { return static_cast<int>(elems_.size()); }
  int index() const { return g_.order() / order(); }
  bool contains(Elem a) const { return member_[a] != 0; }
  bool is_subset_of(const Subgroup& o) const;
  std::string to_string() const;

  bool operator==(const Subgroup& o) const { return elems_ == o.elems_; }
  // order first, then lexicographic element list
  bool operator<(const Subgroup& o) const;

 private:
  FiniteAbelianGroup g_;
  std::vector<Elem> elems_;
  std::vector<char> member_;
};

struct Coset {
  Elem representative = 0;   // minimum member
  std::vector<Elem> members;  // sorted
  bool operator==(const Coset& o) const { return representative == o.representative && members == o.members; }
};

// G/H realised as an explicit table group, coset i <-> element i.
struct QuotientGroup {
  FiniteAbelianGroup group;
  Subgroup subgroup;
  std::vector<Coset> cosets;   // sorted by representative
  std::vector<int> coset_of;   // parent element -> coset index
};

struct SectionMap {
  std::vector<Elem> table;  // coset index -> representative element
};

constexpr int kDefaultGroupCap = 64;

Subgroup trivial_subgroup(const FiniteAbelianGroup& g);
Subgroup full_subgroup(const FiniteAbelianGroup& g);
Subgroup generated_subgroup(const FiniteAbelianGroup& g, Elem d);
Subgroup generated_subgroup(const FiniteAbelianGroup& g, const std::vector<Elem>& gens);
Subgroup subgroup_sum(const Subgroup& a, const Subgroup& b);
Subgroup subgroup_intersection(const Subgroup& a, const Subgroup& b);

std::vector<Subgroup> enumerate_subgroups(const FiniteAbelianGroup& g, int cap = kDefaultGroupCap);
std::vector<Subgroup> subgroups_within(const Subgroup& h);
std::vector<Subgroup> maximal_subgroups(const Subgroup& h);

std::vector<Coset> quotient_cosets(const Subgroup& h);
std::vector<Coset> refine(const Coset& d, const Subgroup& m);
QuotientGroup make_quotient(const Subgroup& h);

SectionMap random_section_map(const QuotientGroup& q, std::uint64_t seed);
SectionMap zero_section_map(const QuotientGroup& q);
bool is_valid_section(const QuotientGroup& q, const SectionMap& f);
std::uint64_t section_map_count(const Subgroup& h);

bool is_prime(int n);

}  // namespace cqpolar
