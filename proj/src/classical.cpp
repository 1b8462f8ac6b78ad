#include "cqpolar/classical.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include "cqpolar/errors.hpp"

namespace cqpolar {

namespace {

struct KeyHash {
  std::size_t operator()(const std::vector<long long>& k) const {
    std::size_t h = 1469598103934665603ULL;
    for (long long v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
    return h;
  }
};

// Accumulates rows, merging those with equal normalised profile.
class RowMerger {
 public:
  RowMerger(int q, std::size_t cap) : q_(q), cap_(cap), key_(q) {}

  void add(const double* row) {
    double s = 0.0;
    for (int x = 0; x < q_; ++x) s += row[x];
    if (s <= 0.0) return;
    // keyed in square-root space: fidelities are sums of sqrt(p p'), so a
    // linear key would merge profiles whose tiny entries still matter
    for (int x = 0; x < q_; ++x) key_[x] = std::llround(std::sqrt(row[x] / s) * 1e13);
    auto [it, fresh] = index_.try_emplace(key_, rows_.size() / q_);
    if (fresh) {
      if (index_.size() > cap_)
        throw CapacityError("classical channel needs more than " + std::to_string(cap_) + " merged outputs");
      rows_.insert(rows_.end(), row, row + q_);
    } else {
      double* r = &rows_[it->second * q_];
      for (int x = 0; x < q_; ++x) r[x] += row[x];
    }
  }

  // Canonical output order: by normalised profile.
  std::vector<double> finish() const {
    std::vector<std::pair<const std::vector<long long>*, std::size_t>> ord;
    ord.reserve(index_.size());
    for (const auto& kv : index_) ord.emplace_back(&kv.first, kv.second);
    std::sort(ord.begin(), ord.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& o : ord) out.insert(out.end(), rows_.begin() + o.second * q_, rows_.begin() + (o.second + 1) * q_);
    return out;
  }

 private:
  int q_;
  std::size_t cap_;
  std::vector<long long> key_;
  std::unordered_map<std::vector<long long>, std::size_t, KeyHash> index_;
  std::vector<double> rows_;
};

}  // namespace

ClassicalChannel::ClassicalChannel(FiniteAbelianGroup g, std::vector<double> table) : g_(std::move(g)), t_(std::move(table)) {
  if (t_.size() % g_.order() != 0) throw StructuralError("transition table size is not a multiple of q");
}

ClassicalChannel ClassicalChannel::from_cq(const CqChannel& w) {
  if (!w.is_diagonal()) throw StructuralError("channel is not diagonal");
  const int q = w.q();
  auto labels = w.label_set();
  std::vector<double> t(labels.size() * w.dim() * q, 0.0);
  for (Elem x = 0; x < q; ++x)
    for (std::size_t l = 0; l < labels.size(); ++l)
      if (const Branch* b = w.output(x).find(labels[l])) {
        Matrix m = b->block();
        for (int i = 0; i < w.dim(); ++i) t[(l * w.dim() + i) * q + x] = std::max(0.0, m(i, i).real());
      }
  return ClassicalChannel(w.group(), std::move(t)).merged();
}

CqChannel ClassicalChannel::to_cq() const {
  std::vector<HybridState> out;
  for (Elem x = 0; x < q(); ++x) {
    std::vector<Branch> br;
    for (std::size_t y = 0; y < outputs(); ++y)
      if (p(y, x) > 0) {
        Matrix f(1, 1);
        f(0, 0) = std::sqrt(p(y, x));
        br.push_back(Branch{{static_cast<std::int32_t>(y)}, f});
      }
    out.emplace_back(1, std::move(br));
  }
  return CqChannel(g_, 1, std::move(out));
}

ClassicalChannel ClassicalChannel::merged(std::size_t cap) const {
  RowMerger m(q(), cap);
  for (std::size_t y = 0; y < outputs(); ++y) m.add(&t_[y * q()]);
  return ClassicalChannel(g_, m.finish());
}

ClassicalChannel minus_transform(const ClassicalChannel& w, const Caps& caps) {
  const int q = w.q();
  const auto& g = w.group();
  const std::size_t ny = w.outputs();
  RowMerger m(q, caps.classical_output_cap);
  std::vector<double> row(q);
  for (std::size_t y1 = 0; y1 < ny; ++y1)
    for (std::size_t y2 = 0; y2 < ny; ++y2) {
      for (Elem u1 = 0; u1 < q; ++u1) {
        double s = 0.0;
        for (Elem u2 = 0; u2 < q; ++u2) s += w.p(y1, g.add(u1, u2)) * w.p(y2, u2);
        row[u1] = s / q;
      }
      m.add(row.data());
    }
  return ClassicalChannel(g, m.finish());
}

ClassicalChannel plus_transform(const ClassicalChannel& w, const Caps& caps) {
  const int q = w.q();
  const auto& g = w.group();
  const std::size_t ny = w.outputs();
  RowMerger m(q, caps.classical_output_cap);
  std::vector<double> row(q);
  for (std::size_t y1 = 0; y1 < ny; ++y1)
    for (std::size_t y2 = 0; y2 < ny; ++y2)
      for (Elem u1 = 0; u1 < q; ++u1) {
        for (Elem u2 = 0; u2 < q; ++u2) row[u2] = w.p(y1, g.add(u1, u2)) * w.p(y2, u2) / q;
        m.add(row.data());
      }
  return ClassicalChannel(g, m.finish());
}

ClassicalChannel quotient_channel(const ClassicalChannel& w, const QuotientGroup& qg) {
  const int m = static_cast<int>(qg.cosets.size());
  std::vector<double> t(w.outputs() * m, 0.0);
  for (std::size_t y = 0; y < w.outputs(); ++y)
    for (int c = 0; c < m; ++c) {
      double s = 0.0;
      for (Elem x : qg.cosets[c].members) s += w.p(y, x);
      t[y * m + c] = s / static_cast<double>(qg.cosets[c].members.size());
    }
  return ClassicalChannel(qg.group, std::move(t)).merged();
}

double holevo_information(const ClassicalChannel& w) {
  const int q = w.q();
  double info = 0.0;
  for (std::size_t y = 0; y < w.outputs(); ++y) {
    double avg = 0.0;
    for (Elem x = 0; x < q; ++x) avg += w.p(y, x);
    avg /= q;
    if (avg <= 0) continue;
    for (Elem x = 0; x < q; ++x) {
      double p = w.p(y, x);
      if (p > 0) info += p * std::log(p / avg);
    }
  }
  return info / q;
}

std::vector<double> pairwise_fidelity(const ClassicalChannel& w) {
  const int q = w.q();
  std::vector<double> f(static_cast<std::size_t>(q) * q, 0.0);
  for (int x = 0; x < q; ++x)
    for (int z = x; z < q; ++z) {
      double s = 0.0;
      for (std::size_t y = 0; y < w.outputs(); ++y) s += std::sqrt(w.p(y, x) * w.p(y, z));
      s = std::min(1.0, s);
      f[x * q + z] = f[z * q + x] = (x == z) ? 1.0 : s;
    }
  return f;
}

FdTable fd_table(const ClassicalChannel& w) { return fd_table_from_pairs(w.group(), pairwise_fidelity(w)); }

}  // namespace cqpolar
