#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "cqpolar/group.hpp"
#include "cqpolar/linalg.hpp"

namespace cqpolar {

// Classical side-register value. Base channels use length-1 labels; the
// transforms concatenate, so all labels in one channel share a length.
using Label = std::vector<std::int32_t>;

// One classical branch, stored as a factor A with block = A A^dagger.
// The block carries the branch weight: weight = ||A||_F^2.
struct Branch {
  Label label;
  Matrix factor;
  double weight() const { return factor.squaredNorm(); }
  Matrix block() const { return factor * factor.adjoint(); }
};

class HybridState {
 public:
  HybridState() = default;
  // Sorts by label; equal labels are merged (blocks add).
  HybridState(int dim, std::vector<Branch> branches);
  static HybridState single(const DensityMatrix& rho);
  static HybridState from_factor(Matrix factor, Label label = {0});

  int dim() const { return dim_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const Branch* find(const Label& l) const;
  double total_weight() const;
  DensityMatrix state(std::size_t i) const;
  // Block-diagonal dense form over the given label order.
  Matrix flatten(const std::vector<Label>& order) const;

 private:
  int dim_ = 0;
  std::vector<Branch> branches_;
};

class CqChannel {
 public:
  CqChannel() = default;
  CqChannel(FiniteAbelianGroup g, int dim, std::vector<HybridState> outputs);

  const FiniteAbelianGroup& group() const { return g_; }
  int q() const { return g_.order(); }
  int dim() const { return dim_; }
  const HybridState& output(Elem x) const { return outputs_[x]; }
  const std::vector<HybridState>& outputs() const { return outputs_; }
  std::vector<Label> label_set() const;
  std::size_t max_branches() const;
  // Every block diagonal in the computational basis (classical channel).
  bool is_diagonal(double tol = 1e-14) const;

 private:
  FiniteAbelianGroup g_;
  int dim_ = 0;
  std::vector<HybridState> outputs_;
};

struct FdTable {
  std::vector<double> values;  // indexed by group element
};

double hybrid_fidelity(const HybridState& a, const HybridState& b);
double hybrid_entropy(const HybridState& s);
// Weighted mixture sum_i w_i s_i, labelwise.
HybridState mix(const std::vector<const HybridState*>& states, const std::vector<double>& weights);

double holevo_information(const CqChannel& w);
std::vector<double> pairwise_fidelity(const CqChannel& w);  // q x q, row-major
double fd(const CqChannel& w, Elem d);
FdTable fd_table(const CqChannel& w);
FdTable fd_table_from_pairs(const FiniteAbelianGroup& g, const std::vector<double>& pairs);
double avg_fidelity(const FdTable& t);
double f_max(const FdTable& t);
double avg_fidelity(const CqChannel& w);
double f_max(const CqChannel& w);

CqChannel quotient_channel(const CqChannel& w, const QuotientGroup& qg);
CqChannel quotient_channel(const CqChannel& w, const Subgroup& h);
// W[M|D], inputs relabelled by H/M through C -> C - rep(D).
CqChannel restricted_quotient_channel(const CqChannel& w, const Subgroup& m, const Subgroup& h, const Coset& d);

struct NestedInformation {
  double value = 0.0;          // I(W[M]) - I(W[H])
  double decomposition = 0.0;  // average over D of I(W[M|D])
};
NestedInformation nested_information(const CqChannel& w, const Subgroup& m, const Subgroup& h);
double nested_fmax(const FdTable& t, const Subgroup& m, const Subgroup& h);
double nested_fmax(const CqChannel& w, const Subgroup& m, const Subgroup& h);

// Same channel with all classical branches expanded into one block-diagonal matrix.
CqChannel flatten(const CqChannel& w);
// Channel assembled from plain density matrices, one per group element.
CqChannel channel_from_states(const FiniteAbelianGroup& g, const std::vector<DensityMatrix>& states);

}  // namespace cqpolar
