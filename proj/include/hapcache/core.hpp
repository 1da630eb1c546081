#ifndef HAPCACHE_CORE_HPP
#define HAPCACHE_CORE_HPP

#include <complex>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hapcache {

using Index = std::ptrdiff_t;
using Complex = std::complex<double>;
using Rng = std::mt19937_64;

/// Dense row-major 0/1 matrix, used for cache placements and requests.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(Index rows, Index cols)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), 0) {}

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }

  std::uint8_t operator()(Index r, Index c) const { return data_[idx(r, c)]; }
  std::uint8_t& operator()(Index r, Index c) { return data_[idx(r, c)]; }

  Index row_sum(Index r) const {
    Index s = 0;
    for (Index c = 0; c < cols_; ++c) s += (*this)(r, c);
    return s;
  }

  std::span<const std::uint8_t> flat() const { return data_; }
  std::span<std::uint8_t> flat() { return data_; }

  bool operator==(const BinaryMatrix&) const = default;

  static BinaryMatrix ones(Index rows, Index cols) {
    BinaryMatrix m(rows, cols);
    std::fill(m.data_.begin(), m.data_.end(), std::uint8_t{1});
    return m;
  }

 private:
  std::size_t idx(Index r, Index c) const { return static_cast<std::size_t>(r * cols_ + c); }

  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Independent random stream keyed by a tuple of integers. Distinct keys give
/// statistically independent streams, so e.g. the request draws of slot t do
/// not depend on how many numbers the policy consumed before it.
inline Rng stream(std::initializer_list<std::uint64_t> key) {
  std::vector<std::uint32_t> words;
  words.reserve(key.size() * 2);
  for (auto k : key) {
    words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(k >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

namespace stream_tag {
inline constexpr std::uint64_t topology = 0x746f706fULL;
inline constexpr std::uint64_t catalog = 0x63617461ULL;
inline constexpr std::uint64_t requests = 0x72657175ULL;
inline constexpr std::uint64_t fso = 0x66736f00ULL;
inline constexpr std::uint64_t rf = 0x72660000ULL;
inline constexpr std::uint64_t policy = 0x706f6c69ULL;
inline constexpr std::uint64_t baseline = 0x62617365ULL;
inline constexpr std::uint64_t beams = 0x6265616dULL;
inline constexpr std::uint64_t init = 0x696e6974ULL;
}  // namespace stream_tag

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double v = u(rng);
  while (v <= 0.0) v = u(rng);
  return v;
}

/// 64-bit FNV-1a, used for config hashes and snapshot digests.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void text(std::string_view s) { bytes(s.data(), s.size()); }
  void number(double v) { bytes(&v, sizeof v); }
  void number(std::int64_t v) { bytes(&v, sizeof v); }
  void numbers(std::span<const double> v) {
    for (double x : v) number(x);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

inline void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace hapcache

#endif  // HAPCACHE_CORE_HPP
