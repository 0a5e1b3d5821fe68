#pragma once

#include <charconv>
#include <complex>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

namespace scramble {

//! All recoverable failures (bad input, unmet preconditions, non-convergence)
//! surface as scramble::Error.  Internal logic bugs stay asserts.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

using Complex = std::complex<double>;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

//! Shortest decimal form that round-trips the exact binary value.
inline std::string format_double(double x) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
  double value = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end)
    throw Error("cannot parse '" + std::string(s) + "' as a number (" + context + ")");
  return value;
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& context) {
  std::uint64_t value = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error("cannot parse '" + std::string(s) + "' as an integer (" + context + ")");
  return value;
}

//! FNV-1a, used to stamp output files with a digest of the resolved config.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

//! Runs fn(i) for i in [0, count).  Results must be stored by index by the
//! caller so the outcome is independent of the thread count.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads < 1) threads = 1;
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::size_t n_threads = std::min<std::size_t>(threads, count);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (std::size_t w = 0; w < n_threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += n_threads) fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace scramble
