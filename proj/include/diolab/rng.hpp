#pragma once

#include <cmath>
#include <cstdint>

namespace diolab {

// Counter-based deterministic stream: output k of stream (master, index, tag)
// is a pure function of the four integers, identical on every platform and
// independent of threading.
class CounterRng {
  public:
    CounterRng(std::uint64_t master_seed, std::uint64_t sample_index, std::uint32_t tag) {
        key_ = mix(mix(master_seed ^ kGolden) + sample_index);
        key_ = mix(key_ ^ (static_cast<std::uint64_t>(tag) * 0x94d049bb133111ebULL));
    }

    std::uint64_t next_u64() { return mix(key_ + (counter_++) * kGolden); }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // Box-Muller; u1 kept away from 0
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        double u2 = next_double();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    static std::uint64_t mix(std::uint64_t z) {
        z += kGolden;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline CounterRng seed_stream(std::uint64_t master_seed, std::uint64_t sample_index,
                              std::uint32_t tag) {
    return CounterRng(master_seed, sample_index, tag);
}

}  // namespace diolab
