#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "cqpolar/channel.hpp"

namespace cqpolar {

// lhs <= rhs, lhs >= rhs or lhs == rhs; margin is always lhs - rhs.
enum class Direction { Le, Ge, Eq };
const char* to_string(Direction d);

struct CheckReport {
  std::string check_id;
  std::string instance;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  Direction direction = Direction::Le;
  double tol = 1e-7;
  bool hypothesis_satisfied = true;
  bool pass = true;
  std::string detail;     // which d / subgroup pair produced the worst margin
  nlohmann::json replay;  // full instance, only filled on failure

  nlohmann::json to_json() const;
};

struct CheckInfo {
  std::string id;
  std::string statement;
  Direction direction;
  double tol;
  bool gated;
  bool needs_channel;  // false: the check draws its own random matrices
};

const std::vector<CheckInfo>& check_catalog();
std::vector<std::string> check_ids();
const CheckInfo& check_info(const std::string& id);  // throws std::invalid_argument

// Evaluates one check on a channel. Checks that work on raw matrices draw
// them from `seed` at the channel's dimension (capped at 8).
CheckReport run_check(const std::string& id, const CqChannel& w, std::uint64_t seed = 0,
                      const std::string& instance = "loaded");
// All listed checks on one channel; transforms are computed once.
std::vector<CheckReport> run_checks(const std::vector<std::string>& ids, const CqChannel& w, std::uint64_t seed = 0,
                                    const std::string& instance = "loaded");

enum class FuzzFamily { Mixed, Pure, Spread, NearHomomorphism };
const char* to_string(FuzzFamily f);

struct FuzzInstance {
  CqChannel w;
  std::string descriptor;
  std::uint64_t seed = 0;
  FuzzFamily family = FuzzFamily::Mixed;
};

// Instance t of configuration (q, k). Families rotate with t; for q = 4 the
// group alternates between Z4 and Z2 x Z2.
FuzzInstance make_fuzz_instance(std::uint64_t seed, int q, int k, int t);

struct FuzzOptions {
  std::vector<int> qs{2, 3, 4};
  std::vector<int> ks{2, 3};
  std::vector<std::string> ids;  // empty: every check
};

// trials instances per (q, k); parallel over instances, output order fixed.
std::vector<CheckReport> run_all(std::uint64_t seed, int trials, const FuzzOptions& opt = {});
std::vector<CheckReport> run_all_serial(std::uint64_t seed, int trials, const FuzzOptions& opt = {});

struct CheckSummary {
  std::string check_id;
  int instances = 0;
  int failures = 0;
  int vacuous = 0;  // hypothesis not met
  double worst_margin = 0.0;  // signed toward violation: max over lhs-rhs for <=, min for >=, max |.| for ==
};
std::vector<CheckSummary> summarize(const std::vector<CheckReport>& reports);

}  // namespace cqpolar
