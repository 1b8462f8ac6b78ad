#include "cqpolar/code.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cqpolar/channel_io.hpp"
#include "cqpolar/errors.hpp"

namespace cqpolar {

double CodeParams::threshold() const {
  if (mode == PlanMode::BestEffort) return tau;
  return std::exp2(-std::exp2(beta_prime * n));
}

void CodeParams::validate() const {
  if (n < 1 || n > 24) throw std::invalid_argument("n must lie in [1, 24]");
  if (!(delta > 0)) throw std::invalid_argument("delta must be positive");
  if (!(beta > 0 && beta < beta_prime && beta_prime < 0.5))
    throw std::invalid_argument("need 0 < beta < beta' < 1/2");
  if (mode == PlanMode::BestEffort && !(tau > 0)) throw std::invalid_argument("tau must be positive");
}

std::vector<SectionMap> CodePlan::sections() const {
  std::vector<SectionMap> v;
  for (const auto& b : branches) v.push_back(b.section);
  return v;
}

namespace {

SectionMap pick_section(const QuotientGroup& qg, const CodeParams& p, std::size_t branch) {
  if (p.sections == SectionMode::Zero) return zero_section_map(qg);
  return random_section_map(qg, derive_seed(p.seed, {branch}));
}

void finalize(CodePlan& plan) {
  const int N = plan.N();
  const double q = plan.group.order();
  double r = 0.0, f = 0.0;
  int in_e = 0;
  for (const auto& b : plan.branches) {
    r += std::log(static_cast<double>(b.cosets()));
    f += (q - 1.0) * b.F_H;
    in_e += b.in_E;
  }
  plan.rate = r / N;
  plan.bound = 2.0 * std::sqrt(double(N)) * std::sqrt(f);
  plan.fraction_in_E = double(in_e) / N;
}

}  // namespace

CodePlan plan_from_scan(const ScanResult& scan, const CodeParams& p) {
  p.validate();
  if (scan.n != p.n) throw std::invalid_argument("scan depth differs from n");
  if (scan.subgroups.empty()) throw std::invalid_argument("scan lacks subgroup statistics");
  CodePlan plan;
  plan.group = scan.group;
  plan.params = p;
  plan.I_W = scan.I_W;
  plan.threshold = p.threshold();
  const auto full = full_subgroup(scan.group);
  for (const auto& rec : scan.records) {
    BranchPlan b;
    b.branch = rec.branch;
    b.I = rec.I;
    b.F = rec.F;
    b.fd = rec.fd;
    // candidates meeting the three membership conditions
    std::vector<Subgroup> cand;
    std::vector<SubgroupStat> stats;
    std::vector<std::size_t> where;
    for (std::size_t h = 0; h < scan.subgroups.size(); ++h) {
      const double lg = std::log(double(scan.subgroups[h].index()));
      const auto& st = rec.per_subgroup[h];
      if (std::abs(rec.I - lg) < p.delta / 2 && std::abs(st.I - lg) < p.delta / 2 && st.F < plan.threshold) {
        cand.push_back(scan.subgroups[h]);
        stats.push_back(st);
        where.push_back(h);
      }
    }
    std::size_t pick;
    if (cand.empty()) {
      b.in_E = false;
      pick = std::find(scan.subgroups.begin(), scan.subgroups.end(), full) - scan.subgroups.begin();
    } else {
      b.in_E = true;
      pick = where[best_subgroup(cand, rec.I, stats)];
    }
    b.H = scan.subgroups[pick];
    b.I_H = rec.per_subgroup[pick].I;
    b.F_H = rec.per_subgroup[pick].F;
    b.quotient = make_quotient(b.H);
    b.section = pick_section(b.quotient, p, rec.branch.index());
    plan.branches.push_back(std::move(b));
  }
  finalize(plan);
  return plan;
}

CodePlan build_plan(const CqChannel& w, const CodeParams& p, const Caps& caps) {
  p.validate();
  auto scan = polarization_scan(w, p.n, caps);
  auto plan = plan_from_scan(scan, p);
  // labels longer than one entry cannot be written back; such channels come
  // from transforms, never from files
  bool plain = true;
  for (const auto& l : w.label_set()) plain = plain && l.size() == 1;
  if (plain) plan.channel = channel_to_json(w);
  return plan;
}

double rate_gap(const CodePlan& plan) { return plan.I_W - plan.rate; }

namespace {

nlohmann::json labels_of(const FiniteAbelianGroup& g, const std::vector<Elem>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Elem x : v) a.push_back(g.label(x));
  return a;
}

const char* mode_name(PlanMode m) { return m == PlanMode::BestEffort ? "best-effort" : "paper-strict"; }

}  // namespace

nlohmann::json plan_to_json(const CodePlan& plan) {
  const auto& g = plan.group;
  const auto& p = plan.params;
  nlohmann::json j;
  j["group"] = g.cyclic_orders();
  j["params"] = {{"n", p.n},
                 {"delta", p.delta},
                 {"beta", p.beta},
                 {"beta_prime", p.beta_prime},
                 {"mode", mode_name(p.mode)},
                 {"tau", p.tau},
                 {"sections", p.sections == SectionMode::Zero ? "zero" : "random"},
                 {"seed", p.seed}};
  j["I_W"] = plan.I_W;
  j["threshold"] = plan.threshold;
  j["rate"] = plan.rate;
  j["rate_gap"] = rate_gap(plan);
  j["bound"] = plan.bound;
  j["fraction_in_E"] = plan.fraction_in_E;
  auto& arr = j["branches"] = nlohmann::json::array();
  for (const auto& b : plan.branches) {
    arr.push_back({{"branch", b.branch.to_string()},
                   {"index", b.branch.index()},
                   {"I", b.I},
                   {"F", b.F},
                   {"fd", b.fd.values},
                   {"H", labels_of(g, b.H.elements())},
                   {"cosets", b.cosets()},
                   {"in_E", b.in_E},
                   {"I_H", b.I_H},
                   {"F_H", b.F_H},
                   {"step_bound", (b.cosets() - 1) * b.F_H},
                   {"section", labels_of(g, b.section.table)}});
  }
  if (!plan.channel.is_null()) j["channel"] = plan.channel;
  return j;
}

CodePlan plan_from_json(const nlohmann::json& j) {
  try {
    CodePlan plan;
    plan.group = FiniteAbelianGroup(j.at("group").get<std::vector<int>>());
    const auto& pj = j.at("params");
    auto& p = plan.params;
    p.n = pj.at("n");
    p.delta = pj.at("delta");
    p.beta = pj.at("beta");
    p.beta_prime = pj.at("beta_prime");
    p.mode = pj.at("mode") == "paper-strict" ? PlanMode::PaperStrict : PlanMode::BestEffort;
    p.tau = pj.at("tau");
    p.sections = pj.at("sections") == "zero" ? SectionMode::Zero : SectionMode::Random;
    p.seed = pj.at("seed");
    p.validate();
    plan.I_W = j.at("I_W");
    plan.threshold = j.at("threshold");
    const auto& g = plan.group;
    for (const auto& bj : j.at("branches")) {
      BranchPlan b;
      b.branch = BranchLabel::parse(bj.at("branch"));
      b.I = bj.at("I");
      b.F = bj.at("F");
      b.fd.values = bj.at("fd").get<std::vector<double>>();
      std::vector<Elem> h;
      for (const auto& s : bj.at("H")) h.push_back(g.parse_label(s));
      b.H = Subgroup(g, h);
      b.quotient = make_quotient(b.H);
      b.in_E = bj.at("in_E");
      b.I_H = bj.at("I_H");
      b.F_H = bj.at("F_H");
      for (const auto& s : bj.at("section")) b.section.table.push_back(g.parse_label(s));
      if (!is_valid_section(b.quotient, b.section))
        throw LoadError("branch " + b.branch.to_string() + ": section map does not pick one element per coset");
      plan.branches.push_back(std::move(b));
    }
    if (plan.N() != p.N()) throw LoadError("plan lists " + std::to_string(plan.N()) + " branches, expected 2^n");
    for (int i = 0; i < plan.N(); ++i)
      if (plan.branches[i].branch.index() != static_cast<std::size_t>(i) || plan.branches[i].branch.n() != p.n)
        throw LoadError("branches are not in decoding order");
    if (j.contains("channel")) plan.channel = j.at("channel");
    finalize(plan);
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw LoadError(std::string("malformed plan: ") + e.what());
  } catch (const StructuralError& e) {
    throw LoadError(std::string("malformed plan: ") + e.what());
  }
}

void validate_message(const CodePlan& plan, const MessageVector& m) {
  if (static_cast<int>(m.symbols.size()) != plan.N())
    throw std::invalid_argument("message has " + std::to_string(m.symbols.size()) + " symbols, plan has " +
                                std::to_string(plan.N()) + " branches");
  for (int i = 0; i < plan.N(); ++i)
    if (m.symbols[i] < 0 || m.symbols[i] >= plan.branches[i].cosets())
      throw std::invalid_argument("symbol " + std::to_string(m.symbols[i]) + " is not a coset of G/H_s at branch " +
                                  plan.branches[i].branch.to_string());
}

MessageVector random_message(const CodePlan& plan, Rng& rng) {
  MessageVector m;
  for (const auto& b : plan.branches) m.symbols.push_back(uniform_int(rng, b.cosets()));
  return m;
}

std::vector<Elem> encode(const FiniteAbelianGroup& g, const std::vector<Elem>& u, EncodeStats* stats) {
  const std::size_t N = u.size();
  if (N == 0 || (N & (N - 1))) throw std::invalid_argument("block length must be a power of two");
  // level[a * width + b] holds E_{s'}^{s''} with a = index(s'), b = index(s'')
  std::vector<Elem> cur = u, next(N);
  std::size_t rows = 1;
  EncodeStats st;
  while (rows < N) {
    const std::size_t width = N / rows, nw = width / 2;
    for (std::size_t a = 0; a < rows; ++a)
      for (std::size_t b = 0; b < nw; ++b) {
        const Elem lo = cur[a * width + 2 * b], hi = cur[a * width + 2 * b + 1];
        next[(2 * a) * nw + b] = g.add(lo, hi);  // (s', -)
        next[(2 * a + 1) * nw + b] = hi;         // (s', +)
        ++st.additions;
        st.node_evaluations += 2;
      }
    std::swap(cur, next);
    rows *= 2;
  }
  if (stats) *stats = st;
  return cur;
}

std::vector<Elem> lift(const CodePlan& plan, const MessageVector& m, const std::vector<SectionMap>& sections) {
  validate_message(plan, m);
  if (static_cast<int>(sections.size()) != plan.N()) throw std::invalid_argument("one section map per branch needed");
  std::vector<Elem> u(plan.N());
  for (int i = 0; i < plan.N(); ++i) {
    if (!is_valid_section(plan.branches[i].quotient, sections[i]))
      throw std::invalid_argument("invalid section map at branch " + plan.branches[i].branch.to_string());
    u[i] = sections[i].table[m.symbols[i]];
  }
  return u;
}

std::vector<Elem> encode(const CodePlan& plan, const MessageVector& m, const std::vector<SectionMap>& sections,
                         EncodeStats* stats) {
  return encode(plan.group, lift(plan, m, sections), stats);
}

std::vector<Elem> encode(const CodePlan& plan, const MessageVector& m, EncodeStats* stats) {
  return encode(plan, m, plan.sections(), stats);
}

}  // namespace cqpolar
