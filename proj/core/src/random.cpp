#include "qsync/random.hpp"

#include <cmath>
#include <numbers>

namespace qsync {

std::uint64_t hash_key(std::initializer_list<std::uint64_t> key) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC908ULL;
  for (std::uint64_t k : key) h = mix64(h ^ mix64(k));
  return h;
}

double CounterRng::uniform() noexcept {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double CounterRng::exponential(double mean) noexcept { return -mean * std::log(uniform()); }

}  // namespace qsync
