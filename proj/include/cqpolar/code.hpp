#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "cqpolar/caps.hpp"
#include "cqpolar/channel.hpp"
#include "cqpolar/polarize.hpp"

namespace cqpolar {

// paper-strict keeps the literal threshold 2^{-2^{beta' n}}; best-effort
// replaces it with the budget tau.
enum class PlanMode { PaperStrict, BestEffort };
enum class SectionMode { Random, Zero };

struct CodeParams {
  int n = 1;
  double delta = 0.5;
  double beta = 0.2;
  double beta_prime = 0.3;
  PlanMode mode = PlanMode::BestEffort;
  double tau = 1e-3;
  SectionMode sections = SectionMode::Random;
  std::uint64_t seed = 0;

  int N() const { return 1 << n; }
  double threshold() const;
  void validate() const;  // throws std::invalid_argument
};

struct BranchPlan {
  BranchLabel branch;
  double I = 0.0;    // I(W^s)
  double F = 0.0;    // F(W^s)
  FdTable fd;
  Subgroup H;        // H_s
  QuotientGroup quotient;
  SectionMap section;
  bool in_E = false;  // all three conditions met by H_s
  double I_H = 0.0;  // I(W^s[H_s])
  double F_H = 0.0;  // F(W^s[H_s])

  int cosets() const { return static_cast<int>(quotient.cosets.size()); }
  bool frozen() const { return cosets() == 1; }
};

struct CodePlan {
  FiniteAbelianGroup group;
  CodeParams params;
  double I_W = 0.0;
  double threshold = 0.0;
  std::vector<BranchPlan> branches;  // decoding order: branches[i].branch.index() == i
  double rate = 0.0;                 // (1/N) sum log|G/H_s|
  double bound = 0.0;                // 2 sqrt(N) sqrt(sum (q-1) F(W^s[H_s]))
  double fraction_in_E = 0.0;
  nlohmann::json channel;            // the channel the plan was built for

  int N() const { return static_cast<int>(branches.size()); }
  std::vector<SectionMap> sections() const;
};

CodePlan build_plan(const CqChannel& w, const CodeParams& p, const Caps& caps = Caps::defaults());
// Same rule applied to an existing scan (which must carry subgroup statistics).
CodePlan plan_from_scan(const ScanResult& scan, const CodeParams& p);

nlohmann::json plan_to_json(const CodePlan& plan);
CodePlan plan_from_json(const nlohmann::json& j);

// I(W) - R
double rate_gap(const CodePlan& plan);

// One coset index per branch, in decoding order.
struct MessageVector {
  std::vector<int> symbols;
};
void validate_message(const CodePlan& plan, const MessageVector& m);
MessageVector random_message(const CodePlan& plan, Rng& rng);

struct EncodeStats {
  std::uint64_t additions = 0;         // group additions performed
  std::uint64_t node_evaluations = 0;  // recursion nodes evaluated, N log2 N
};

// u[b] is the symbol of branch index b; the result x[a] feeds channel copy a.
std::vector<Elem> encode(const FiniteAbelianGroup& g, const std::vector<Elem>& u, EncodeStats* stats = nullptr);
// Lifts coset symbols through the section maps, then encodes.
std::vector<Elem> lift(const CodePlan& plan, const MessageVector& m, const std::vector<SectionMap>& sections);
std::vector<Elem> encode(const CodePlan& plan, const MessageVector& m, EncodeStats* stats = nullptr);
std::vector<Elem> encode(const CodePlan& plan, const MessageVector& m, const std::vector<SectionMap>& sections,
                         EncodeStats* stats = nullptr);

}  // namespace cqpolar
