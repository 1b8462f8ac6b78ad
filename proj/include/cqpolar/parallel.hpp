#pragma once
#include <exception>
#include <mutex>

namespace cqpolar {

// Exceptions must not leave an OpenMP region. Bodies run through run(), the
// first exception is kept, and rethrow() raises it after the region joins.
class ErrorTrap {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard<std::mutex> lk(mu_);
      if (!e_) e_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (e_) std::rethrow_exception(e_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr e_;
};

}  // namespace cqpolar
