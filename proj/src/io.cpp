#include "mrs/io.hpp"

#include <bit>
#include <cstring>

namespace mrs::io {

namespace {
// Containers are little-endian on disk; this codebase only targets LE hosts.
static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");
}  // namespace

Writer::Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw Error("cannot open for writing: " + path);
}

void Writer::magic(const char m[8]) { bytes(m, 8); }
void Writer::u32(uint32_t v) { bytes(&v, sizeof v); }
void Writer::u64(uint64_t v) { bytes(&v, sizeof v); }
void Writer::f64(double v) { bytes(&v, sizeof v); }

void Writer::bytes(const void* data, size_t n) {
    out_.write(static_cast<const char*>(data), std::streamsize(n));
    if (!out_) throw Error("write failed: " + path_);
    offset_ += n;
}

void Writer::f64_array(const std::vector<double>& v) {
    if (!v.empty()) bytes(v.data(), v.size() * sizeof(double));
}

void Writer::complex_array(const std::vector<std::complex<double>>& v) {
    // std::complex<double> is layout-compatible with double[2] (re, im)
    if (!v.empty()) bytes(v.data(), v.size() * 2 * sizeof(double));
}

void Writer::close() {
    out_.close();
    if (!out_) throw Error("close failed: " + path_);
}

Reader::Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw Error("cannot open for reading: " + path);
}

void Reader::bytes(void* data, size_t n) {
    in_.read(static_cast<char*>(data), std::streamsize(n));
    if (size_t(in_.gcount()) != n)
        throw FormatError("unexpected end of file in " + path_, offset_ + size_t(in_.gcount()));
    offset_ += n;
}

void Reader::expect_magic(const char m[8]) {
    char got[8];
    bytes(got, 8);
    if (std::memcmp(got, m, 8) != 0)
        throw FormatError("bad magic in " + path_, offset_ - 8);
}

uint32_t Reader::u32() {
    uint32_t v;
    bytes(&v, sizeof v);
    return v;
}

uint64_t Reader::u64() {
    uint64_t v;
    bytes(&v, sizeof v);
    return v;
}

double Reader::f64() {
    double v;
    bytes(&v, sizeof v);
    return v;
}

std::string Reader::str(size_t n) {
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
}

std::vector<double> Reader::f64_array(size_t n) {
    std::vector<double> v(n);
    if (n) bytes(v.data(), n * sizeof(double));
    return v;
}

std::vector<std::complex<double>> Reader::complex_array(size_t n) {
    std::vector<std::complex<double>> v(n);
    if (n) bytes(v.data(), n * 2 * sizeof(double));
    return v;
}

void Reader::expect_eof() {
    char c;
    in_.read(&c, 1);
    if (in_.gcount() != 0)
        throw FormatError("trailing bytes in " + path_, offset_);
}

}  // namespace mrs::io
