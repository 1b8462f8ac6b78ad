#pragma once
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cqpolar/caps.hpp"
#include "cqpolar/code.hpp"

namespace cqpolar {

struct DecodeStep {
  BranchLabel branch;
  int decoded = 0;            // coset index of G/H_s
  Elem element = 0;           // f_s(decoded)
  double prob = 1.0;          // probability of the sampled outcome
  double survival = 1.0;      // product of prob so far
  std::vector<double> dist;   // full outcome distribution over cosets
};

struct DecodeTrace {
  std::vector<DecodeStep> steps;
  MessageVector estimate;
  bool collapsed = false;  // survival fell below 1e-300
  // Along the transmitted prefix, when the caller supplies it: 1 - Tr(E rho)
  // per step against the received state, and the survival of the whole chain.
  std::vector<double> true_step_error;
  double true_survival = 1.0;
  double union_bound = 0.0;  // 2 sqrt(N) sqrt(sum true_step_error)
};

// Successive-cancellation decoder with pretty-good step measurements on the
// joint output of N channel uses. Step measurements are built lazily per
// decoded prefix and cached; the cache is safe to share across threads.
class ScDecoder {
 public:
  ScDecoder(const CqChannel& w, const CodePlan& plan, const Caps& caps = Caps::defaults());

  int N() const { return static_cast<int>(plan_.branches.size()); }
  int dim() const { return dim_; }
  const CodePlan& plan() const { return plan_; }

  // Dense effects of the step-pos measurement given the decoded prefix u^{<pos}.
  Povm step_povm(std::size_t pos, const std::vector<Elem>& prefix) const;
  // Exact PGM error of step pos along the true prefix, averaged over messages.
  double exact_step_error(std::size_t pos) const;

  // One pure component of the output for codeword x, drawn with its weight.
  Vector sample_output(const std::vector<Elem>& x, Rng& rng) const;
  // Product basis vector |y_0> (x) ... (x) |y_{N-1}> of the flattened output space.
  Vector basis_output(const std::vector<int>& y) const;

  // Decodes psi. `forced` fixes the outcome of every step (distributions are
  // still recorded); `truth` is the transmitted u, enabling the true-path fields.
  DecodeTrace decode(const Vector& psi, const std::vector<SectionMap>& sections, std::uint64_t seed,
                     const std::vector<Elem>* truth = nullptr, const std::vector<int>* forced = nullptr) const;

 private:
  struct Step {
    int m = 1;
    Matrix U;                    // orthonormal basis of supp(S)
    std::vector<Matrix> sqrtA;   // sqrt E = U sqrtA U^dag + (I - U U^dag)/sqrt m
    double success = 1.0;        // sum_c Tr(E_c w_c)
  };
  std::shared_ptr<const Step> step(std::size_t pos, const std::vector<Elem>& prefix) const;
  std::shared_ptr<const Step> build(std::size_t pos, const std::vector<Elem>& prefix) const;
  Vector apply(const Step& st, int c, const Vector& v) const;

  CodePlan plan_;
  FiniteAbelianGroup g_;
  int base_dim_ = 0;
  int dim_ = 0;
  std::vector<Matrix> factor_;  // per input, flattened output factor
  std::vector<Matrix> dense_;   // per input, flattened output state
  mutable std::mutex mu_;
  mutable std::map<std::vector<Elem>, std::shared_ptr<const Step>> cache_;
};

// Exact SC decoding of a diagonal channel: likelihood recursion over the
// sampled classical outputs. Matches ScDecoder's outcome statistics.
class ClassicalScDecoder {
 public:
  ClassicalScDecoder(const CqChannel& w, const CodePlan& plan);

  int N() const { return static_cast<int>(plan_.branches.size()); }
  int outputs() const { return static_cast<int>(lik_.empty() ? 0 : lik_[0].size()); }
  std::vector<int> sample_output(const std::vector<Elem>& x, Rng& rng) const;
  DecodeTrace decode(const std::vector<int>& y, const std::vector<SectionMap>& sections, std::uint64_t seed,
                     const std::vector<Elem>* truth = nullptr, const std::vector<int>* forced = nullptr) const;

 private:
  using Table = std::vector<std::vector<double>>;  // [copy][symbol]
  std::vector<Elem> recurse(const Table& L, std::size_t base, const std::vector<SectionMap>& sections, Rng& rng,
                            const std::vector<int>* forced, DecodeTrace& tr) const;

  CodePlan plan_;
  FiniteAbelianGroup g_;
  std::vector<std::vector<double>> lik_;  // lik_[x][y] = P(y|x)
};

struct Interval {
  double low = 0.0, high = 0.0;
};
// Wilson score interval for k successes in n trials at z standard deviations.
Interval wilson_interval(std::uint64_t k, std::uint64_t n, double z);
// Half-width of the z = 1 Wilson interval.
double wilson_sigma(std::uint64_t k, std::uint64_t n);

enum class DecoderPath { Auto, Quantum, Classical };

struct ExperimentOptions {
  int trials = 1000;
  std::uint64_t seed = 0;
  bool fixed_sections = false;  // use the plan's sections instead of fresh random ones per trial
  DecoderPath path = DecoderPath::Auto;
  Caps caps = Caps::defaults();
};

struct ExperimentResult {
  std::string path;
  int trials = 0;
  std::uint64_t errors = 0;
  std::uint64_t collapses = 0;
  double error_rate = 0.0;
  Interval ci;         // 95% Wilson
  double sigma = 0.0;  // z = 1 Wilson half-width
  double bound = 0.0;  // 2 sqrt(N) sqrt(sum (q-1) F(W^s[H_s]))
  std::vector<double> step_error;  // mean true-path step error per branch
  std::vector<double> step_bound;  // (|G/H_s| - 1) F(W^s[H_s])
  std::uint64_t union_bound_violations = 0;
  double worst_union_margin = 0.0;  // max over trials of (1 - survival) - bound, <= 0 when it holds
};

ExperimentResult error_experiment(const CqChannel& w, const CodePlan& plan, const ExperimentOptions& opt);
ExperimentResult error_experiment_serial(const CqChannel& w, const CodePlan& plan, const ExperimentOptions& opt);

nlohmann::json experiment_to_json(const ExperimentResult& r, const CodePlan& plan);
// branch, H cosets, step_error, step_bound
std::string step_profile_csv(const ExperimentResult& r, const CodePlan& plan);

}  // namespace cqpolar
