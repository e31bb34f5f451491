// Runtime support for generated counting programs.
//
// Provides the arbitrary-precision integer alias, per-function memo
// caches keyed by fixed-length tuples of machine integers, exact
// power/binomial helpers, and command-line argument parsing.  Generated
// source pins FOMC_RUNTIME_VERSION so stale files fail to compile.
//
// Requires GMP with its C++ bindings (link with -lgmpxx -lgmp).

#ifndef COUNTER_RUNTIME_HPP
#define COUNTER_RUNTIME_HPP

#define FOMC_RUNTIME_VERSION 1

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

namespace rt {

using Int = mpz_class;

template <std::size_t N>
using Key = std::array<std::int64_t, N>;

inline std::int64_t key_part(const Int &v) {
  if (!v.fits_slong_p()) {
    std::cerr << "argument too large for a cache key" << std::endl;
    std::abort();
  }
  return static_cast<std::int64_t>(v.get_si());
}

template <std::size_t N>
struct KeyHash {
  std::size_t operator()(const Key<N> &k) const {
    std::size_t h = 1469598103934665603ULL;  // FNV-1a
    for (const std::int64_t part : k) {
      h ^= static_cast<std::size_t>(part);
      h *= 1099511628211ULL;
    }
    return h;
  }
};

template <std::size_t N>
class Cache {
 public:
  const Int *find(const Key<N> &key) const {
    const auto it = table_.find(key);
    return it == table_.end() ? nullptr : &it->second;
  }

  void store(const Key<N> &key, const Int &value) { table_.emplace(key, value); }

 private:
  std::unordered_map<Key<N>, Int, KeyHash<N>> table_;
};

inline Int pow(const Int &base, const Int &exp) {
  if (exp < 0) {
    std::cerr << "negative exponent " << exp << std::endl;
    std::abort();
  }
  if (!exp.fits_ulong_p()) {
    std::cerr << "exponent too large: " << exp << std::endl;
    std::abort();
  }
  Int result;
  mpz_pow_ui(result.get_mpz_t(), base.get_mpz_t(), exp.get_ui());
  return result;
}

// Iterative product over k terms; each intermediate division is exact.
inline Int binom(const Int &n, const Int &k) {
  if (k < 0 || n < 0 || k > n) {
    return Int(0);
  }
  Int result(1);
  for (Int i(0); i < k; ++i) {
    result *= n - i;
    result /= i + 1;
  }
  return result;
}

inline bool parse_args(const int argc, char **argv, const int arity,
                       std::vector<Int> &out) {
  if (argc - 1 != arity) {
    std::cerr << "expected " << arity << " domain size argument(s), got "
              << argc - 1 << std::endl;
    return false;
  }
  for (int i = 1; i < argc; ++i) {
    const std::string text(argv[i]);
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
      std::cerr << "invalid domain size '" << text << "'" << std::endl;
      return false;
    }
    out.emplace_back(text);
  }
  return true;
}

}  // namespace rt

#endif  // COUNTER_RUNTIME_HPP
