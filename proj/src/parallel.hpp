#pragma once

#include <exception>
#include <mutex>

namespace pbox::detail {

// Collects the exception thrown by the lowest loop index inside an OpenMP region so it can be
// rethrown on the calling thread deterministically.
class FirstError {
 public:
  void capture(long index) {
    std::lock_guard lock(mu_);
    if (!error_ || index < index_) {
      error_ = std::current_exception();
      index_ = index;
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
  long index_ = 0;
};

}  // namespace pbox::detail
