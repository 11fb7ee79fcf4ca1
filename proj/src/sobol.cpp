#include "mrs/sobol.hpp"

#include <bit>

#include "mrs/errors.hpp"

namespace mrs {

namespace {

constexpr int kBits = 32;

// Joe-Kuo parameters per dimension (d >= 2): primitive polynomial degree s,
// coefficient bits a (a_1 .. a_{s-1}, MSB first) and initial odd m values.
struct PolyRow {
    int s;
    uint32_t a;
    uint32_t m[6];
};

constexpr PolyRow kRows[SobolSequence::kMaxDim - 1] = {
    {1, 0, {1}},                    // d=2
    {2, 1, {1, 3}},                 // d=3
    {3, 1, {1, 3, 1}},              // d=4
    {3, 2, {1, 1, 1}},              // d=5
    {4, 1, {1, 1, 3, 3}},           // d=6
    {4, 4, {1, 3, 5, 13}},          // d=7
    {5, 2, {1, 1, 5, 5, 17}},       // d=8
    {5, 4, {1, 1, 5, 5, 5}},        // d=9
    {5, 7, {1, 1, 7, 11, 19}},      // d=10
    {5, 11, {1, 1, 5, 1, 1}},       // d=11
    {5, 13, {1, 1, 1, 3, 11}},      // d=12
    {5, 14, {1, 3, 5, 5, 31}},      // d=13
    {6, 1, {1, 3, 3, 9, 7, 49}},    // d=14
    {6, 13, {1, 1, 1, 15, 21, 21}}, // d=15
    {6, 16, {1, 3, 1, 13, 27, 49}}, // d=16
};

std::vector<uint32_t> direction_numbers(int d) {
    // m_k recurrence over GF(2): m_k = m_{k-s} ^ (m_{k-s} << s) ^ sum_i a_i m_{k-i} << i
    uint32_t m[kBits];
    if (d == 1) {
        for (int k = 0; k < kBits; ++k) m[k] = 1;
    } else {
        const PolyRow& row = kRows[d - 2];
        for (int k = 0; k < row.s; ++k) m[k] = row.m[k];
        for (int k = row.s; k < kBits; ++k) {
            m[k] = m[k - row.s] ^ (m[k - row.s] << row.s);
            for (int i = 1; i <= row.s - 1; ++i)
                if ((row.a >> (row.s - 1 - i)) & 1u) m[k] ^= m[k - i] << i;
        }
    }
    std::vector<uint32_t> v(kBits);
    for (int k = 0; k < kBits; ++k) v[size_t(k)] = m[k] << (kBits - 1 - k);
    return v;
}

}  // namespace

SobolSequence::SobolSequence(int dim, uint64_t skip) : dim_(dim) {
    if (dim < 1 || dim > kMaxDim)
        throw UnsupportedDimension("Sobol dimension must be in [1, " + std::to_string(kMaxDim) +
                                   "], got " + std::to_string(dim));
    state_.assign(size_t(dim), 0);
    direction_.reserve(size_t(dim));
    for (int d = 1; d <= dim; ++d) direction_.push_back(direction_numbers(d));
    for (uint64_t i = 0; i < skip; ++i) advance();
}

void SobolSequence::advance() {
    // Antonov-Saleev: flip the direction number at the rightmost zero bit of
    // the current index, yielding the gray-code ordering of the sequence.
    const int c = std::countr_one(index_);
    if (c >= kBits) throw Error("Sobol sequence exhausted");
    for (int d = 0; d < dim_; ++d) state_[size_t(d)] ^= direction_[size_t(d)][size_t(c)];
    ++index_;
}

std::vector<double> SobolSequence::next() {
    advance();
    std::vector<double> x(static_cast<size_t>(dim_));
    for (int d = 0; d < dim_; ++d) x[size_t(d)] = double(state_[size_t(d)]) * 0x1.0p-32;
    return x;
}

std::vector<std::vector<double>> sobol_sequence(int dim, int count, uint64_t skip) {
    if (count < 1) throw Error("Sobol point count must be >= 1");
    SobolSequence seq(dim, skip);
    std::vector<std::vector<double>> pts;
    pts.reserve(size_t(count));
    for (int i = 0; i < count; ++i) pts.push_back(seq.next());
    return pts;
}

}  // namespace mrs
