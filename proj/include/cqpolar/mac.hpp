#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "cqpolar/caps.hpp"
#include "cqpolar/channel.hpp"

namespace cqpolar {

// Bit i set <=> user i is in the subset.
using UserSet = std::uint32_t;

constexpr int kMaxUsers = 3;

// An m-user cq-MAC seen as a cq-channel over G_1 x ... x G_m. Each user group
// is a product of cyclic factors; the channel's group concatenates them, so
// user i owns the factors [begin(i), begin(i+1)).
class MacChannel {
 public:
  MacChannel() = default;
  MacChannel(std::vector<FiniteAbelianGroup> users, CqChannel w);

  int users() const { return static_cast<int>(users_.size()); }
  const FiniteAbelianGroup& user_group(int i) const { return users_[i]; }
  const CqChannel& channel() const { return w_; }
  UserSet all() const { return (UserSet(1) << users()) - 1; }
  // x -> per-user element indices
  std::vector<Elem> split(Elem x) const;
  Elem join(const std::vector<Elem>& per_user) const;
  // Same user structure, different underlying channel (e.g. a synthetic one).
  MacChannel with_channel(CqChannel w) const;

 private:
  std::vector<FiniteAbelianGroup> users_;
  std::vector<int> begin_;
  CqChannel w_;
};

// States listed in product-group index order (first user most significant).
MacChannel mac_from_states(std::vector<FiniteAbelianGroup> users, const std::vector<DensityMatrix>& states);
// Seeded random MAC: rank-r states of dimension k.
MacChannel random_mac(std::vector<FiniteAbelianGroup> users, int k, int rank, std::uint64_t seed);

// G_S = (prod_{i in S} G_i) x (prod_{j not in S} {0})
Subgroup user_subgroup(const MacChannel& w, UserSet s);

// I[S] = I(X_S; B X_{S^c}), through I(W) - I(W[G_S]).
double subset_information(const MacChannel& w, UserSet s);
// Same quantity as the average over x_{S^c} of the Holevo information of
// x_S -> rho_{x_S, x_{S^c}}.
double subset_information_direct(const MacChannel& w, UserSet s);

struct RateRegion {
  int users = 0;
  int n = 0;                   // polarization depth the estimate was taken at
  std::vector<double> bound;   // indexed by UserSet, bound[0] = 0

  double sum_rate() const { return bound.back(); }
  // S subset of T implies bound[S] <= bound[T] + tol; all bounds >= -tol.
  bool monotone(double tol = 1e-9) const;
  bool contains(const std::vector<double>& rates, double tol = 0.0) const;
};

RateRegion region(const MacChannel& w);
// (1/2^n) sum_s I[S](W^s) over every branch of depth n.
RateRegion polarized_region_estimate(const MacChannel& w, int n, const Caps& caps = Caps::defaults());

std::string user_set_name(UserSet s);  // "{1,2}"
nlohmann::json region_to_json(const RateRegion& r);
// one row per (n, subset)
std::string regions_csv(const std::vector<RateRegion>& rs);

}  // namespace cqpolar
