#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace mrs {

// --- deterministic splittable RNG -------------------------------------------
//
// All randomness in the library flows through this counter-based generator so
// that results are independent of evaluation order and thread count.

inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }
inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c) { return mix64(mix64(a, b), c); }

// Sequential stream keyed by an arbitrary number of mixed seeds.
class SplitMix {
  public:
    explicit SplitMix(uint64_t seed) : state_(mix64(seed)) {}
    SplitMix(uint64_t a, uint64_t b) : state_(mix64(a, b)) {}
    SplitMix(uint64_t a, uint64_t b, uint64_t c) : state_(mix64(a, b, c)) {}

    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // uniform in [0,1)
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    // uniform in (0,1], safe as a Box-Muller log argument
    double uniform_pos() { return double((next() >> 11) + 1) * 0x1.0p-53; }

    // standard normal via Box-Muller (one value per call; pair cached)
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u = uniform_pos();
        double v = uniform();
        double r = std::sqrt(-2.0 * std::log(u));
        double a = 6.283185307179586476925286766559 * v;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// --- deterministic parallel loop --------------------------------------------
//
// Runs fn(i) for i in [begin, end). Work is split into contiguous chunks, so
// any reduction done per-index stays bitwise identical to a sequential run as
// long as writes are disjoint. Worker count honours MRSQUANT_THREADS.

void parallel_for(int64_t begin, int64_t end, const std::function<void(int64_t)>& fn);
int worker_count();

}  // namespace mrs
