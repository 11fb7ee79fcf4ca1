#pragma once

#include <complex>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mrs/errors.hpp"

namespace mrs::io {

// All binary containers share one framing:
//   8-byte magic | u32 format version | u64 header length | UTF-8 JSON header | payload
// Numeric payloads are raw little-endian IEEE-754 doubles.

class Writer {
  public:
    explicit Writer(const std::string& path);
    void magic(const char m[8]);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f64(double v);
    void bytes(const void* data, size_t n);
    void f64_array(const std::vector<double>& v);
    void complex_array(const std::vector<std::complex<double>>& v);
    void close();
    size_t offset() const { return offset_; }

  private:
    std::ofstream out_;
    std::string path_;
    size_t offset_ = 0;
};

class Reader {
  public:
    explicit Reader(const std::string& path);
    void expect_magic(const char m[8]);
    uint32_t u32();
    uint64_t u64();
    double f64();
    void bytes(void* data, size_t n);
    std::string str(size_t n);
    std::vector<double> f64_array(size_t n);
    std::vector<std::complex<double>> complex_array(size_t n);
    void expect_eof();
    size_t offset() const { return offset_; }

  private:
    std::ifstream in_;
    std::string path_;
    size_t offset_ = 0;
};

}  // namespace mrs::io
