#include "designforge/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace dforge {

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

BigInt factorial(int n) {
  BigInt r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

BigInt binomial(const BigInt& n, int k) {
  if (k < 0 || n < k) return 0;
  BigInt r = 1;
  for (int j = 0; j < k; ++j) {
    r *= (n - j);
    r /= (j + 1);
  }
  return r;
}

BigInt ipow(const BigInt& base, long e) {
  BigInt r = 1, b = base;
  while (e > 0) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

double to_double(const BigInt& x) { return x.convert_to<double>(); }

double to_double(const BigRat& x) {
  const BigInt& n = boost::multiprecision::numerator(x);
  const BigInt& d = boost::multiprecision::denominator(x);
  if (n == 0) return 0.0;
  double ln = log_big(n < 0 ? BigInt(-n) : n) - log_big(d);
  if (std::abs(ln) < 700.0) return x.convert_to<double>();
  return (n < 0 ? -1.0 : 1.0) * std::exp(ln);
}

double log_big(const BigInt& x) {
  if (x <= 0) throw DomainError("log of non-positive integer");
  std::size_t bits = boost::multiprecision::msb(x);
  if (bits < 1000) return std::log(x.convert_to<double>());
  std::size_t shift = bits - 60;
  BigInt top = x >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

double log_multiset(double log_x, int k) {
  // binom(x+k-1, k) = prod_{j<k} (x+j)/(j+1)
  double s = 0.0;
  for (int j = 0; j < k; ++j) {
    double rel = j * std::exp(-log_x);
    s += log_x + std::log1p(rel) - std::log(static_cast<double>(j + 1));
  }
  return s;
}

int thread_count() {
  if (const char* env = std::getenv("DESIGNFORGE_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1 : static_cast<int>(h);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
  std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, w, &f, &errs] {
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        errs[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace dforge
