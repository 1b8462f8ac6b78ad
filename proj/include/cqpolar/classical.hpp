#pragma once
#include <vector>

#include "cqpolar/caps.hpp"
#include "cqpolar/channel.hpp"

namespace cqpolar {

// Diagonal channel as a transition table P(y|x), rows indexed by output y.
// Outputs with proportional rows are merged, which leaves I and every
// fidelity unchanged; this keeps synthesised channels small.
class ClassicalChannel {
 public:
  ClassicalChannel() = default;
  ClassicalChannel(FiniteAbelianGroup g, std::vector<double> table);

  static ClassicalChannel from_cq(const CqChannel& w);
  // dim-1 quantum embedding with one label per output
  CqChannel to_cq() const;

  const FiniteAbelianGroup& group() const { return g_; }
  int q() const { return g_.order(); }
  std::size_t outputs() const { return q() ? t_.size() / q() : 0; }
  double p(std::size_t y, Elem x) const { return t_[y * q() + x]; }
  const std::vector<double>& table() const { return t_; }

  ClassicalChannel merged(std::size_t cap = static_cast<std::size_t>(-1)) const;

 private:
  FiniteAbelianGroup g_;
  std::vector<double> t_;
};

ClassicalChannel minus_transform(const ClassicalChannel& w, const Caps& caps);
ClassicalChannel plus_transform(const ClassicalChannel& w, const Caps& caps);
ClassicalChannel quotient_channel(const ClassicalChannel& w, const QuotientGroup& qg);
double holevo_information(const ClassicalChannel& w);
std::vector<double> pairwise_fidelity(const ClassicalChannel& w);
FdTable fd_table(const ClassicalChannel& w);

}  // namespace cqpolar
