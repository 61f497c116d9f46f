#include "kreg/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kreg {
namespace {

std::size_t initial_thread_count() {
  if (const char* env = std::getenv("KREG_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<std::size_t>(value);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

std::atomic<std::size_t>& thread_setting() {
  static std::atomic<std::size_t> setting{initial_thread_count()};
  return setting;
}

}  // namespace

std::size_t thread_count() { return thread_setting().load(); }

void set_thread_count(std::size_t n) { thread_setting().store(std::max<std::size_t>(n, 1)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1) {
    body(0, n);
    return;
  }

  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(n, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace kreg
