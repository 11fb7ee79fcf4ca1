#pragma once

#include <cstdint>
#include <vector>

namespace mrs {

// Sobol low-discrepancy sequence in [0,1)^dim, dim <= 16, built from the
// published Joe-Kuo primitive polynomials and initial direction numbers.
// The sequence starts at index 1; the all-zeros point at index 0 is skipped.
class SobolSequence {
  public:
    static constexpr int kMaxDim = 16;

    explicit SobolSequence(int dim, uint64_t skip = 0);

    // next point of the sequence
    std::vector<double> next();

    int dim() const { return dim_; }
    uint64_t index() const { return index_; }

  private:
    void advance();

    int dim_;
    uint64_t index_ = 0;  // index of the point currently held in state_
    std::vector<uint32_t> state_;
    std::vector<std::vector<uint32_t>> direction_;  // [dim][bit]
};

// First `count` points after skipping `skip` (point indices skip+1 .. skip+count).
std::vector<std::vector<double>> sobol_sequence(int dim, int count, uint64_t skip = 0);

}  // namespace mrs
