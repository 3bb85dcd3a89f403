#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cogsec {

/// Base error type for all library failures.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when the embedded conic solver cannot certify a solution.
class SolveError : public Error {
public:
  explicit SolveError(const std::string& msg) : Error(msg) {}
};

namespace detail {
inline void str_append(std::ostringstream&) {}
template <typename T, typename... Rest>
void str_append(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  str_append(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string str(const Args&... args) {
  std::ostringstream os;
  detail::str_append(os, args...);
  return os.str();
}

template <typename... Args>
[[noreturn]] void fail(const Args&... args) {
  throw Error(str(args...));
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Node sets are 0-based internally; all I/O and messages are 1-based.
inline std::string format_node_set(const std::vector<int>& nodes) {
  std::string out = "{";
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(nodes[i] + 1);
  }
  out += "}";
  return out;
}

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

// Seeded draws routed through explicit helpers so results do not depend on
// the standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) fail("uniform_index: empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// Uniform sample of a size-k subset of {0..n-1}, returned sorted.
inline std::vector<int> sample_subset(std::mt19937_64& rng, int n, int k) {
  if (k > n) fail("sample_subset: k=", k, " exceeds n=", n);
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    const auto j = i + static_cast<int>(uniform_index(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> out(pool.begin(), pool.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cogsec
