#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace soa {

// Subset of the inputs {1, ..., d} stored as a bitmask; bit i-1 stands for
// input i.  d is capped at 24 so that 2^d value tables stay addressable.
class Coalition {
 public:
  static constexpr int kMaxDim = 24;

  Coalition() : d_(1), bits_(0) {}
  Coalition(int d, std::uint32_t bits) : d_(check_dim(d)), bits_(bits) {
    if (bits >> d_) throw std::invalid_argument("coalition bits outside dimension");
  }

  static Coalition empty(int d) { return Coalition(d, 0); }
  static Coalition full(int d) { return Coalition(d, mask_all(d)); }
  static Coalition single(int d, int i) { return empty(d).with(i); }
  static Coalition of(int d, std::initializer_list<int> members) {
    Coalition c = empty(d);
    for (int i : members) c = c.with(i);
    return c;
  }
  static Coalition from_indices(int d, std::span<const int> members) {
    Coalition c = empty(d);
    for (int i : members) c = c.with(i);
    return c;
  }

  int dim() const { return d_; }
  std::uint32_t bits() const { return bits_; }
  int size() const { return std::popcount(bits_); }
  bool empty_set() const { return bits_ == 0; }

  bool contains(int i) const {
    check_member(i);
    return (bits_ >> (i - 1)) & 1u;
  }
  Coalition with(int i) const {
    check_member(i);
    return Coalition(d_, bits_ | (1u << (i - 1)));
  }
  Coalition without(int i) const {
    check_member(i);
    return Coalition(d_, bits_ & ~(1u << (i - 1)));
  }

  Coalition complement() const { return Coalition(d_, mask_all(d_) & ~bits_); }
  bool subset_of(const Coalition& o) const {
    check_same(o);
    return (bits_ & ~o.bits_) == 0;
  }
  friend Coalition operator|(const Coalition& a, const Coalition& b) {
    a.check_same(b);
    return Coalition(a.d_, a.bits_ | b.bits_);
  }
  friend Coalition operator&(const Coalition& a, const Coalition& b) {
    a.check_same(b);
    return Coalition(a.d_, a.bits_ & b.bits_);
  }
  // Set difference a \ b.
  friend Coalition operator-(const Coalition& a, const Coalition& b) {
    a.check_same(b);
    return Coalition(a.d_, a.bits_ & ~b.bits_);
  }

  std::vector<int> members() const {
    std::vector<int> out;
    for (int i = 1; i <= d_; ++i)
      if ((bits_ >> (i - 1)) & 1u) out.push_back(i);
    return out;
  }

  // "{1,3}" for display.
  std::string to_string() const {
    std::string s = "{";
    bool first = true;
    for (int i : members()) {
      if (!first) s += ",";
      s += std::to_string(i);
      first = false;
    }
    return s + "}";
  }

  // "1,3" for use as a map key; the empty set is "".
  std::string key() const {
    std::string s;
    for (int i : members()) {
      if (!s.empty()) s += ",";
      s += std::to_string(i);
    }
    return s;
  }

  friend bool operator==(const Coalition& a, const Coalition& b) {
    return a.d_ == b.d_ && a.bits_ == b.bits_;
  }
  friend bool operator!=(const Coalition& a, const Coalition& b) { return !(a == b); }
  friend bool operator<(const Coalition& a, const Coalition& b) {
    return a.bits_ != b.bits_ ? a.bits_ < b.bits_ : a.d_ < b.d_;
  }

  static std::uint32_t mask_all(int d) { return (d == 32) ? ~0u : ((1u << d) - 1u); }

  static int check_dim(int d) {
    if (d < 1 || d > kMaxDim)
      throw std::invalid_argument("dimension must be in [1, " +
                                  std::to_string(kMaxDim) + "], got " + std::to_string(d));
    return d;
  }

 private:
  int d_;
  std::uint32_t bits_;

  void check_member(int i) const {
    if (i < 1 || i > d_)
      throw std::out_of_range("input index " + std::to_string(i) +
                              " outside [1, " + std::to_string(d_) + "]");
  }
  void check_same(const Coalition& o) const {
    if (d_ != o.d_) throw std::invalid_argument("coalition dimension mismatch");
  }
};

// Enumerates all submasks of `mask`, ascending, including 0 and mask itself.
// The (v - mask) & mask step walks the subset lattice in O(1) per subset.
template <typename F>
void for_each_submask(std::uint32_t mask, F&& fn) {
  std::uint32_t v = 0;
  while (true) {
    fn(v);
    if (v == mask) break;
    v = (v - mask) & mask;
  }
}

// Binomial coefficient as a 64-bit integer; exact for every n <= 61 and
// throws beyond instead of overflowing.
inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (n > 61) throw std::overflow_error("binomial(n, k) needs n <= 61");
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  }
  if (r > static_cast<unsigned __int128>(INT64_MAX))
    throw std::overflow_error("binomial overflow");
  return static_cast<long long>(r);
}

}  // namespace soa
