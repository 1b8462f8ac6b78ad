#include "cqpolar/mac.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cqpolar/errors.hpp"
#include "cqpolar/polarize.hpp"

namespace cqpolar {

namespace {

FiniteAbelianGroup product_of(const std::vector<FiniteAbelianGroup>& users) {
  std::vector<int> orders;
  for (const auto& u : users) {
    if (!u.is_product()) throw StructuralError("user groups must be products of cyclic groups");
    orders.insert(orders.end(), u.cyclic_orders().begin(), u.cyclic_orders().end());
  }
  return FiniteAbelianGroup(orders);
}

}  // namespace

MacChannel::MacChannel(std::vector<FiniteAbelianGroup> users, CqChannel w) : users_(std::move(users)), w_(std::move(w)) {
  if (users_.empty() || users_.size() > static_cast<std::size_t>(kMaxUsers))
    throw StructuralError("a MAC needs between 1 and " + std::to_string(kMaxUsers) + " users");
  if (product_of(users_).cyclic_orders() != w_.group().cyclic_orders())
    throw StructuralError("channel group is not the product of the user groups");
  int at = 0;
  for (const auto& u : users_) {
    begin_.push_back(at);
    at += static_cast<int>(u.cyclic_orders().size());
  }
  begin_.push_back(at);
}

std::vector<Elem> MacChannel::split(Elem x) const {
  const auto r = w_.group().element(x).residues;
  std::vector<Elem> out;
  for (int i = 0; i < users(); ++i)
    out.push_back(users_[i].index_of(GroupElement{std::vector<int>(r.begin() + begin_[i], r.begin() + begin_[i + 1])}));
  return out;
}

Elem MacChannel::join(const std::vector<Elem>& per_user) const {
  if (static_cast<int>(per_user.size()) != users()) throw std::invalid_argument("one element per user needed");
  GroupElement g;
  for (int i = 0; i < users(); ++i) {
    auto r = users_[i].element(per_user[i]).residues;
    g.residues.insert(g.residues.end(), r.begin(), r.end());
  }
  return w_.group().index_of(g);
}

MacChannel MacChannel::with_channel(CqChannel w) const { return MacChannel(users_, std::move(w)); }

MacChannel mac_from_states(std::vector<FiniteAbelianGroup> users, const std::vector<DensityMatrix>& states) {
  auto g = product_of(users);
  return MacChannel(std::move(users), channel_from_states(g, states));
}

MacChannel random_mac(std::vector<FiniteAbelianGroup> users, int k, int rank, std::uint64_t seed) {
  auto g = product_of(users);
  Rng rng = make_rng(seed, {0x3ac});
  std::vector<DensityMatrix> st;
  for (Elem x = 0; x < g.order(); ++x) st.push_back(random_density(k, rank, rng));
  return MacChannel(std::move(users), channel_from_states(g, st));
}

namespace {

void check_set(const MacChannel& w, UserSet s) {
  if (s & ~w.all()) throw std::invalid_argument("user subset names a user the MAC does not have");
}

}  // namespace

Subgroup user_subgroup(const MacChannel& w, UserSet s) {
  check_set(w, s);
  std::vector<Elem> el;
  for (Elem x = 0; x < w.channel().q(); ++x) {
    auto p = w.split(x);
    bool in = true;
    for (int i = 0; i < w.users(); ++i)
      if (!(s >> i & 1) && p[i] != 0) in = false;
    if (in) el.push_back(x);
  }
  return Subgroup(w.channel().group(), el);
}

double subset_information(const MacChannel& w, UserSet s) {
  check_set(w, s);
  if (s == 0) return 0.0;
  return holevo_information(w.channel()) - holevo_information(quotient_channel(w.channel(), user_subgroup(w, s)));
}

double subset_information_direct(const MacChannel& w, UserSet s) {
  check_set(w, s);
  if (s == 0) return 0.0;
  // bucket inputs by the complement users' symbols
  std::map<std::vector<Elem>, std::vector<Elem>> buckets;
  for (Elem x = 0; x < w.channel().q(); ++x) {
    auto p = w.split(x);
    for (int i = 0; i < w.users(); ++i)
      if (s >> i & 1) p[i] = 0;
    buckets[p].push_back(x);
  }
  double total = 0.0;
  for (const auto& [key, xs] : buckets) {
    std::vector<const HybridState*> ptrs;
    double avg = 0.0;
    for (Elem x : xs) {
      ptrs.push_back(&w.channel().output(x));
      avg += hybrid_entropy(w.channel().output(x));
    }
    const std::vector<double> weights(xs.size(), 1.0 / xs.size());
    total += hybrid_entropy(mix(ptrs, weights)) - avg / xs.size();
  }
  return total / buckets.size();
}

bool RateRegion::monotone(double tol) const {
  for (UserSet a = 0; a < bound.size(); ++a) {
    if (bound[a] < -tol) return false;
    for (UserSet b = 0; b < bound.size(); ++b)
      if ((a & b) == a && bound[a] > bound[b] + tol) return false;
  }
  return bound.empty() || std::abs(bound[0]) <= tol;
}

bool RateRegion::contains(const std::vector<double>& rates, double tol) const {
  if (static_cast<int>(rates.size()) != users) throw std::invalid_argument("one rate per user needed");
  for (double r : rates)
    if (r < -tol) return false;
  for (UserSet s = 1; s < bound.size(); ++s) {
    double sum = 0.0;
    for (int i = 0; i < users; ++i)
      if (s >> i & 1) sum += rates[i];
    if (sum > bound[s] + tol) return false;
  }
  return true;
}

RateRegion region(const MacChannel& w) {
  RateRegion r;
  r.users = w.users();
  r.bound.assign(w.all() + 1, 0.0);
  const double iw = holevo_information(w.channel());
  for (UserSet s = 1; s <= w.all(); ++s)
    r.bound[s] = iw - holevo_information(quotient_channel(w.channel(), user_subgroup(w, s)));
  return r;
}

RateRegion polarized_region_estimate(const MacChannel& w, int n, const Caps& caps) {
  if (n < 0) throw std::invalid_argument("depth must be nonnegative");
  if (n == 0) return region(w);
  auto scan = polarization_scan(w.channel(), n, caps);
  RateRegion r;
  r.users = w.users();
  r.n = n;
  r.bound.assign(w.all() + 1, 0.0);
  for (UserSet s = 1; s <= w.all(); ++s) {
    const auto h = user_subgroup(w, s);
    const auto it = std::find(scan.subgroups.begin(), scan.subgroups.end(), h);
    if (it == scan.subgroups.end()) throw StructuralError("scan is missing a user subgroup");
    const std::size_t k = it - scan.subgroups.begin();
    double acc = 0.0;
    for (const auto& rec : scan.records) acc += rec.I - rec.per_subgroup[k].I;
    r.bound[s] = acc / scan.records.size();
  }
  return r;
}

std::string user_set_name(UserSet s) {
  std::string out = "{";
  for (int i = 0; i < 32; ++i)
    if (s >> i & 1) out += (out.size() > 1 ? "," : "") + std::to_string(i + 1);
  return out + "}";
}

nlohmann::json region_to_json(const RateRegion& r) {
  nlohmann::json j;
  j["users"] = r.users;
  j["n"] = r.n;
  j["sum_rate"] = r.sum_rate();
  auto& c = j["constraints"] = nlohmann::json::array();
  for (UserSet s = 1; s < r.bound.size(); ++s) c.push_back({{"subset", user_set_name(s)}, {"mask", s}, {"bound", r.bound[s]}});
  return j;
}

std::string regions_csv(const std::vector<RateRegion>& rs) {
  std::ostringstream os;
  os.precision(17);
  os << "n,subset,bound\n";
  for (const auto& r : rs)
    for (UserSet s = 1; s < r.bound.size(); ++s) os << r.n << ",\"" << user_set_name(s) << "\"," << r.bound[s] << '\n';
  return os.str();
}

}  // namespace cqpolar
