#pragma once

#include <cstdint>
#include <random>

#include "mla/field.hpp"

namespace mla {

// Deterministic RNG: mt19937_64's output sequence is fully specified by the
// C++ standard, so a fixed seed reproduces bit-for-bit on every platform.
// Bounded draws use plain modulo: the slight bias is irrelevant for test-point
// sampling and keeps the draw sequence independent of library internals
// (std::uniform_int_distribution is not portable across implementations).
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Uniform-ish draw from [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }

  felem elem(const Field& F) { return static_cast<felem>(below(F.q)); }

  felem nonzero_elem(const Field& F) {
    return static_cast<felem>(1 + below(F.q - 1));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace mla
