#ifndef MISOLOC_RNG_HPP
#define MISOLOC_RNG_HPP

#include <complex>
#include <cstdint>
#include <random>

namespace misoloc {

// splitmix64 finalizer; used to derive independent sub-stream seeds from a
// master seed so that trial i is reproducible in isolation.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(master ^ mix_seed(stream + 1));
}

// Uniform double in [0, 1) from the top 53 bits of the engine output.
// Avoids std::uniform_real_distribution, whose output sequence is not
// pinned by the standard.
inline double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_angle(std::mt19937_64& rng) {
  return 2.0 * 3.141592653589793238462643383279502884 * uniform_unit(rng);
}

// Circularly-symmetric complex Gaussian with E|z|^2 = 1
// (real and imaginary parts each have variance 1/2).
inline std::complex<double> complex_gaussian(std::mt19937_64& rng) {
  const double u = uniform_unit(rng);
  const double radius = std::sqrt(-std::log1p(-u));
  const double phase = uniform_angle(rng);
  return {radius * std::cos(phase), radius * std::sin(phase)};
}

}  // namespace misoloc

#endif
