#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "cqpolar/caps.hpp"
#include "cqpolar/channel.hpp"
#include "cqpolar/classical.hpp"

namespace cqpolar {

enum class Sign : std::uint8_t { Minus = 0, Plus = 1 };

// s = (s_1, ..., s_n); W^s applies s_1 first.
struct BranchLabel {
  std::vector<Sign> signs;

  int n() const { return static_cast<int>(signs.size()); }
  // Decoding position: s_1 is the most significant bit, + counts as 1.
  std::size_t index() const;
  static BranchLabel from_index(std::size_t idx, int n);
  std::string to_string() const;  // e.g. "-+-", empty label prints as ""
  static BranchLabel parse(const std::string& s);

  bool operator==(const BranchLabel& o) const { return signs == o.signs; }
  // Decoding order.
  bool operator<(const BranchLabel& o) const { return signs.size() == o.signs.size() ? index() < o.index() : signs.size() < o.signs.size(); }
};

// All 2^n labels in decoding order.
std::vector<BranchLabel> branch_order(int n);
// The order with the last coordinate most significant. Not consistent with
// the encoder; kept to demonstrate that.
std::vector<BranchLabel> last_major_order(int n);

CqChannel minus_transform(const CqChannel& w, const Caps& caps = Caps::defaults());
CqChannel plus_transform(const CqChannel& w, const Caps& caps = Caps::defaults());
CqChannel synthesize(const CqChannel& w, const BranchLabel& s, const Caps& caps = Caps::defaults());
ClassicalChannel synthesize(const ClassicalChannel& w, const BranchLabel& s, const Caps& caps = Caps::defaults());

struct SubgroupStat {
  double I = 0.0;  // I(W^s[H])
  double F = 0.0;  // F(W^s[H])
};

struct PolarizationRecord {
  BranchLabel branch;
  double I = 0.0;
  FdTable fd;
  double F = 0.0;
  double Fmax = 0.0;
  std::vector<SubgroupStat> per_subgroup;  // aligned with ScanResult::subgroups
  int best_h = -1;                         // index into ScanResult::subgroups
};

struct ScanOptions {
  bool allow_classical = true;  // use the diagonal fast path when possible
  bool subgroup_stats = true;
};

struct ScanResult {
  FiniteAbelianGroup group;
  int n = 0;
  double I_W = 0.0;
  bool classical_path = false;
  std::vector<Subgroup> subgroups;
  std::vector<PolarizationRecord> records;  // decoding order
};

// Shares prefixes between branches and runs subtrees in parallel.
ScanResult polarization_scan(const CqChannel& w, int n, const Caps& caps = Caps::defaults(),
                             const ScanOptions& opt = {});
// Reference: each branch synthesised from scratch, one after another.
ScanResult polarization_scan_serial(const CqChannel& w, int n, const Caps& caps = Caps::defaults(),
                                    const ScanOptions& opt = {});

// Subgroup minimising |I - log|G/H|| + |I(W[H]) - log|G/H||, ties to larger
// |H| then the lexicographically smaller element list.
int best_subgroup(const std::vector<Subgroup>& subgroups, double I, const std::vector<SubgroupStat>& stats);

struct ProcessStep {
  double I = 0.0;
  double Fmax = 0.0;
  double I_minus = 0.0;  // children of this node: exact one-step expectation
  double I_plus = 0.0;
  double Fmax_plus = 0.0;
  std::vector<double> I_quot;        // I(W_m[H]) per subgroup
  std::vector<double> I_quot_minus;  // I(W_m^-[H])
  std::vector<double> I_quot_plus;   // I(W_m^+[H])
  Sign next = Sign::Minus;           // sign taken to reach step m+1
};

struct ProcessSample {
  std::vector<Subgroup> subgroups;
  std::vector<std::vector<ProcessStep>> paths;  // [trial][m], m = 0..n
  std::vector<double> mean_I;                   // per depth
  std::vector<double> mean_Fmax;
  double max_martingale_gap = 0.0;       // max |(I(W^-)+I(W^+))/2 - I(W)| along paths
  double max_submartingale_deficit = 0.0;  // max over H of 2I(W[H]) - I(W^-[H]) - I(W^+[H]), clipped at 0
  double martingale_z = 0.0;             // largest |mean increment| / standard error over depths
};

// Uniform random sign paths, one RNG stream per (seed, path index).
ProcessSample process_sample(const CqChannel& w, int n, int trials, std::uint64_t seed,
                             const Caps& caps = Caps::defaults());

}  // namespace cqpolar
