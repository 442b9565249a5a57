#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace modr {

/// Deterministic Gaussian generator: mt19937_64 + hand-rolled Box-Muller, so
/// streams are reproducible byte-for-byte independent of the standard
/// library's normal_distribution implementation.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

  private:
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace modr
