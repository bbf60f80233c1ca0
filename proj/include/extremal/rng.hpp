// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace extremal {

// SplitMix64 step: advances the state by the golden-ratio increment and
// returns a mixed output word. Used both as the stream generator and as
// the key-derivation hash for substreams, so that (master, tag...) keys
// identify streams independently of thread scheduling.
constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream of pseudo-random numbers. A stream is identified by
// a 64-bit key; substreams are derived by folding integer tags into the key,
// so regenerating with the same (master seed, tags) is bit-identical no
// matter how work is scheduled across threads.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t key) noexcept : state_(key) {
        // decorrelate trivially related keys (0, 1, 2, ...)
        splitmix64_next(state_);
    }

    static std::uint64_t derive_key(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
        std::uint64_t key = master;
        for (std::uint64_t t : tags) {
            key ^= splitmix64_next(key) + 0x632be59bd9b4e019ULL + (t << 1) + 1;
            splitmix64_next(key);
        }
        return key;
    }

    static RandomStream substream(std::uint64_t master,
                                  std::initializer_list<std::uint64_t> tags) noexcept {
        return RandomStream(derive_key(master, tags));
    }

    std::uint64_t next_u64() noexcept { return splitmix64_next(state_); }

    // uniform on the open interval (0,1); never returns 0 or 1
    double uniform01() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    // standard normal, Box-Muller; consumes two uniforms per pair of variates
    double normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u = uniform01();
        const double v = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double a = 6.283185307179586476925286766559 * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // standard exponential
    double exponential() noexcept { return -std::log(uniform01()); }

    // Student t with df degrees of freedom (Bailey's polar method)
    double student_t(double df) noexcept {
        for (;;) {
            const double u = 2.0 * uniform01() - 1.0;
            const double v = 2.0 * uniform01() - 1.0;
            const double w = u * u + v * v;
            if (w < 1.0 && w > 0.0) {
                return u * std::sqrt(df * (std::pow(w, -2.0 / df) - 1.0) / w);
            }
        }
    }

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace extremal
