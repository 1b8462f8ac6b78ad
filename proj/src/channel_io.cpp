#include "cqpolar/channel_io.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "cqpolar/errors.hpp"

namespace cqpolar {

using nlohmann::json;

namespace {

Matrix read_matrix(const json& st, int k, const std::string& where) {
  if (!st.contains("re")) throw LoadError(where + ": missing \"re\"");
  const json& re = st.at("re");
  const json* im = st.contains("im") ? &st.at("im") : nullptr;
  if (!re.is_array() || static_cast<int>(re.size()) != k) throw LoadError(where + ": \"re\" must have " + std::to_string(k) + " rows");
  if (im && (!im->is_array() || static_cast<int>(im->size()) != k))
    throw LoadError(where + ": \"im\" must have " + std::to_string(k) + " rows");
  Matrix m(k, k);
  for (int i = 0; i < k; ++i) {
    if (!re[i].is_array() || static_cast<int>(re[i].size()) != k) throw LoadError(where + ": row " + std::to_string(i) + " of \"re\" has wrong length");
    if (im && (!(*im)[i].is_array() || static_cast<int>((*im)[i].size()) != k))
      throw LoadError(where + ": row " + std::to_string(i) + " of \"im\" has wrong length");
    for (int j = 0; j < k; ++j) {
      if (!re[i][j].is_number()) throw LoadError(where + ": non-numeric entry");
      double r = re[i][j].get<double>();
      double c = 0.0;
      if (im) {
        if (!(*im)[i][j].is_number()) throw LoadError(where + ": non-numeric entry");
        c = (*im)[i][j].get<double>();
      }
      m(i, j) = cplx(r, c);
    }
  }
  return m;
}

}  // namespace

CqChannel load_channel(const json& j, const NumericTolerances& tol) {
  if (!j.is_object()) throw LoadError("channel JSON must be an object");
  if (!j.contains("group") || !j["group"].is_array() || j["group"].empty()) throw LoadError("missing or empty \"group\"");
  std::vector<int> orders;
  for (const auto& n : j["group"]) {
    if (!n.is_number_integer() || n.get<int>() < 1) throw LoadError("\"group\" entries must be integers >= 1");
    orders.push_back(n.get<int>());
  }
  long long q = 1;
  for (int n : orders) q *= n;
  if (q > kDefaultGroupCap) throw CapacityError("group order " + std::to_string(q) + " exceeds cap " + std::to_string(kDefaultGroupCap));
  FiniteAbelianGroup g(orders);
  if (!j.contains("k") || !j["k"].is_number_integer() || j["k"].get<int>() < 1) throw LoadError("missing or invalid \"k\"");
  const int k = j["k"].get<int>();
  if (!j.contains("states") || !j["states"].is_object()) throw LoadError("missing \"states\" object");

  // labels interned across the whole channel, in sorted string order
  std::map<std::string, int> label_ids;
  for (auto it = j["states"].begin(); it != j["states"].end(); ++it)
    if (it.value().is_object() && it.value().contains("branches") && it.value()["branches"].is_array())
      for (const auto& b : it.value()["branches"])
        if (b.is_object()) {
          if (b.contains("label") && !b["label"].is_string()) throw LoadError("input " + it.key() + ": branch label must be a string");
          label_ids[b.contains("label") ? b["label"].get<std::string>() : std::string()] = 0;
        }
  int next = 0;
  for (auto& kv : label_ids) kv.second = next++;

  std::vector<HybridState> outs(g.order());
  std::vector<char> seen(g.order(), 0);
  for (auto it = j["states"].begin(); it != j["states"].end(); ++it) {
    Elem x;
    try {
      x = g.parse_label(it.key());
    } catch (const LoadError&) {
      throw LoadError("state key " + it.key() + " is not an element of the group");
    }
    const std::string where = "input " + g.label(x);
    if (seen[x]) throw LoadError(where + ": duplicate state");
    seen[x] = 1;
    const json& st = it.value();
    if (!st.is_object()) throw LoadError(where + ": state must be an object");
    std::vector<Branch> branches;
    try {
      if (st.contains("branches")) {
        if (!st["branches"].is_array() || st["branches"].empty()) throw LoadError(where + ": \"branches\" must be a non-empty array");
        double total = 0.0;
        std::map<std::string, int> used;
        for (const auto& b : st["branches"]) {
          if (!b.is_object()) throw LoadError(where + ": branch must be an object");
          double w = 1.0;
          if (b.contains("w")) {
            if (!b["w"].is_number()) throw LoadError(where + ": branch weight must be a number");
            w = b["w"].get<double>();
          }
          if (!(w >= 0.0) || !std::isfinite(w)) throw LoadError(where + ": negative branch weight");
          std::string lab = b.contains("label") ? b["label"].get<std::string>() : std::string();
          if (used[lab]++) throw LoadError(where + ": duplicate branch label '" + lab + "'");
          total += w;
          auto rho = DensityMatrix::from(read_matrix(b, k, where), tol);
          if (w > 0) branches.push_back(Branch{{label_ids.at(lab)}, psd_factor(rho.matrix()) * std::sqrt(w)});
        }
        if (std::abs(total - 1.0) > tol.trace) throw LoadError(where + ": branch weights sum to " + std::to_string(total));
      } else {
        auto rho = DensityMatrix::from(read_matrix(st, k, where), tol);
        branches.push_back(Branch{{0}, psd_factor(rho.matrix())});
      }
    } catch (const LoadError& e) {
      std::string msg = e.what();
      if (msg.rfind("input ", 0) != 0) msg = where + ": " + msg;
      throw LoadError(msg);
    }
    outs[x] = HybridState(k, std::move(branches));
  }
  for (Elem x = 0; x < g.order(); ++x)
    if (!seen[x]) throw LoadError("input " + g.label(x) + ": missing state");
  return CqChannel(g, k, std::move(outs));
}

CqChannel load_channel_file(const std::string& path, const NumericTolerances& tol) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw LoadError(path + ": " + e.what());
  }
  if (j.contains("channel") && j["channel"].is_object() && !j.contains("states")) return load_channel(j["channel"], tol);
  return load_channel(j, tol);
}

json channel_to_json(const CqChannel& w) {
  const auto& g = w.group();
  if (!g.is_product()) throw StructuralError("only product-group channels are serialisable");
  json j;
  j["group"] = g.cyclic_orders();
  j["k"] = w.dim();
  json states = json::object();
  for (Elem x = 0; x < g.order(); ++x) {
    json branches = json::array();
    for (const auto& b : w.output(x).branches()) {
      if (b.label.size() != 1) throw StructuralError("labels of synthesised channels are not serialisable");
      Matrix m = b.block();
      const double wt = m.trace().real();
      m /= wt;
      json re = json::array(), im = json::array();
      for (int r = 0; r < w.dim(); ++r) {
        json rr = json::array(), ii = json::array();
        for (int c = 0; c < w.dim(); ++c) {
          rr.push_back(m(r, c).real());
          ii.push_back(m(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ii);
      }
      branches.push_back({{"w", wt}, {"label", std::to_string(b.label[0])}, {"re", re}, {"im", im}});
    }
    states[g.label(x)] = {{"branches", branches}};
  }
  j["states"] = states;
  return j;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"classical-symmetric", "pure-states", "depolarized-orthogonal", "random",
                                              "erasure"};
  return names;
}

CqChannel make_preset(const std::string& name, const PresetParams& p) {
  if (name == "classical-symmetric") {
    if (p.q < 2 || !(p.p >= 0 && p.p <= 1)) throw LoadError("classical-symmetric needs q >= 2 and p in [0,1]");
    FiniteAbelianGroup g({p.q});
    std::vector<DensityMatrix> st;
    for (int x = 0; x < p.q; ++x) {
      Matrix m = Matrix::Zero(p.q, p.q);
      for (int y = 0; y < p.q; ++y) m(y, y) = (y == x) ? 1.0 - p.p : p.p / (p.q - 1);
      st.push_back(DensityMatrix::from(m));
    }
    return channel_from_states(g, st);
  }
  if (name == "pure-states") {
    if (p.angles.empty()) throw LoadError("pure-states needs at least one angle");
    FiniteAbelianGroup g({static_cast<int>(p.angles.size())});
    std::vector<HybridState> out;
    for (double t : p.angles) {
      Matrix f(2, 1);
      f << std::cos(t), std::sin(t);
      out.push_back(HybridState::from_factor(f));
    }
    return CqChannel(g, 2, std::move(out));
  }
  if (name == "depolarized-orthogonal") {
    if (p.q < 2 || !(p.lambda >= 0 && p.lambda <= 1)) throw LoadError("depolarized-orthogonal needs q >= 2 and lambda in [0,1]");
    FiniteAbelianGroup g({p.q});
    std::vector<DensityMatrix> st;
    for (int x = 0; x < p.q; ++x) {
      Matrix m = Matrix::Identity(p.q, p.q) * (p.lambda / p.q);
      m(x, x) += 1.0 - p.lambda;
      st.push_back(DensityMatrix::from(m));
    }
    return channel_from_states(g, st);
  }
  if (name == "random") {
    if (p.q < 1 || p.k < 1) throw LoadError("random needs q >= 1 and k >= 1");
    FiniteAbelianGroup g({p.q});
    Rng rng = make_rng(p.seed, {0xc4a});
    std::vector<DensityMatrix> st;
    for (int x = 0; x < p.q; ++x) {
      int rank = 1 + uniform_int(rng, p.k);
      st.push_back(rank == 1 ? DensityMatrix::pure(haar_vector(p.k, rng)) : random_density(p.k, rank, rng));
    }
    return channel_from_states(g, st);
  }
  if (name == "erasure") {
    if (p.q < 2 || !(p.eps >= 0 && p.eps <= 1)) throw LoadError("erasure needs q >= 2 and eps in [0,1]");
    FiniteAbelianGroup g({p.q});
    std::vector<DensityMatrix> st;
    for (int x = 0; x < p.q; ++x) {
      Matrix m = Matrix::Zero(p.q + 1, p.q + 1);
      m(x, x) = 1.0 - p.eps;
      m(p.q, p.q) = p.eps;
      st.push_back(DensityMatrix::from(m));
    }
    return channel_from_states(g, st);
  }
  throw LoadError("unknown preset '" + name + "'");
}

}  // namespace cqpolar
