#ifndef SKD_PARALLEL_HPP
#define SKD_PARALLEL_HPP

#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/Core>

namespace skd {

// Runs fn(i) for i in [0, n). Work items must be independent; each writes
// only its own slice of the output, so the result is identical for any
// thread count.
template <class Fn>
void parallel_for(Eigen::Index n, int threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  int workers = static_cast<int>(std::min<Eigen::Index>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      try {
        for (Eigen::Index i = w; i < n; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace skd

#endif  // SKD_PARALLEL_HPP
