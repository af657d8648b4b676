#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace udkf {

// Reproducible noise source for truth simulation. The uniform stream is
// MT19937-64 (fully specified by the C++ standard, so reimplementable
// elsewhere); doubles and normal deviates come from fixed transforms of
// that stream:
//   uniform: u = ((bits >> 11) + 0.5) * 2^-53, open interval (0,1)
//   normal:  Box-Muller, z0 = sqrt(-2 ln u1) cos(2 pi u2),
//                        z1 = sqrt(-2 ln u1) sin(2 pi u2)
// exactly two uniforms per normal pair, second deviate cached.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    const std::uint64_t bits = engine_();
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::vector<double> normal_vector(std::size_t n) {
    std::vector<double> out(n);
    for (double& v : out) v = normal();
    return out;
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace udkf
