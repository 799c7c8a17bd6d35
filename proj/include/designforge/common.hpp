#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace dforge {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

struct CapacityError : std::length_error {
  using std::length_error::length_error;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Raised when an identity that must hold exactly fails.
struct ConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerances shared by the oracle and the cross-checks.
namespace tol {
inline constexpr double projector = 1e-10;
inline constexpr double cross = 1e-8;
inline constexpr double clamp = 1e-10;
}  // namespace tol

double log_factorial(int n);
BigInt factorial(int n);
BigInt binomial(const BigInt& n, int k);
BigInt ipow(const BigInt& base, long e);
double to_double(const BigInt& x);
double to_double(const BigRat& x);
// natural log of a big integer, accurate for values far outside double range
double log_big(const BigInt& x);

// ln of binom(x + k - 1, k) for real x given as ln x.
double log_multiset(double log_x, int k);

// exp(v) with overflow reported as +inf rather than UB-ish huge values.
inline double exp_or_inf(double v) { return v > 709.0 ? kInf : std::exp(v); }

// Worker count: DESIGNFORGE_THREADS if set, else hardware concurrency.
int thread_count();

// Runs f(i) for i in [0, n). Each index is handled by exactly one worker, so
// callers writing to slot i get results independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace dforge
