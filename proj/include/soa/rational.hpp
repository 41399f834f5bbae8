#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace soa {

// Exact rational arithmetic on 128-bit integers.  Every operation keeps the
// value reduced (gcd 1, positive denominator) and throws std::overflow_error
// instead of silently wrapping, so a result that comes back is exact.
class Rational {
 public:
  using Int = __int128;

  constexpr Rational() : num_(0), den_(1) {}
  constexpr Rational(long long n) : num_(n), den_(1) {}
  Rational(Int num, Int den) : num_(num), den_(den) { normalize(); }

  static Rational from_int(long long n) { return Rational(n); }

  // Parses "p/q", a plain integer, or a decimal such as "-0.125" / "2.5e-3".
  // Decimals map to the exact rational they spell (0.1 -> 1/10).
  static Rational parse(std::string_view text);

  // Exact rational for the decimal the double prints as under shortest
  // round-trip formatting, so 0.1 becomes 1/10 rather than the binary value.
  static Rational from_double(double x);

  Int num() const { return num_; }
  Int den() const { return den_; }
  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }
  int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

  double to_double() const {
    return static_cast<double>(static_cast<long double>(num_) /
                               static_cast<long double>(den_));
  }

  std::string to_string() const;

  Rational operator-() const {
    Rational r;
    r.num_ = checked_neg(num_);
    r.den_ = den_;
    return r;
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    // a/b + c/d = (ad + cb) / bd, reduced afterwards.
    Int ad = checked_mul(a.num_, b.den_);
    Int cb = checked_mul(b.num_, a.den_);
    return Rational(checked_add(ad, cb), checked_mul(a.den_, b.den_));
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    Int ad = checked_mul(a.num_, b.den_);
    Int cb = checked_mul(b.num_, a.den_);
    return Rational(checked_sub(ad, cb), checked_mul(a.den_, b.den_));
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    // Cross-reduce first to keep intermediates small.
    Int g1 = gcd(abs128(a.num_), b.den_);
    Int g2 = gcd(abs128(b.num_), a.den_);
    Int n = checked_mul(a.num_ / (g1 == 0 ? 1 : g1), b.num_ / (g2 == 0 ? 1 : g2));
    Int d = checked_mul(a.den_ / (g2 == 0 ? 1 : g2), b.den_ / (g1 == 0 ? 1 : g1));
    return Rational(n, d);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    Rational inv;
    inv.num_ = b.den_;
    inv.den_ = b.num_;
    if (inv.den_ < 0) {
      inv.num_ = checked_neg(inv.num_);
      inv.den_ = checked_neg(inv.den_);
    }
    return a * inv;
  }

  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return checked_mul(a.num_, b.den_) < checked_mul(b.num_, a.den_);
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  friend Rational abs(const Rational& a) { return a.num_ < 0 ? -a : a; }

 private:
  Int num_;
  Int den_;

  static Int abs128(Int x) { return x < 0 ? -x : x; }

  static Int gcd(Int a, Int b) {
    a = abs128(a);
    b = abs128(b);
    while (b != 0) {
      Int t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  static Int checked_add(Int a, Int b) {
    Int r;
    if (__builtin_add_overflow(a, b, &r))
      throw std::overflow_error("rational arithmetic overflow (addition)");
    return r;
  }
  static Int checked_sub(Int a, Int b) {
    Int r;
    if (__builtin_sub_overflow(a, b, &r))
      throw std::overflow_error("rational arithmetic overflow (subtraction)");
    return r;
  }
  static Int checked_mul(Int a, Int b) {
    Int r;
    if (__builtin_mul_overflow(a, b, &r))
      throw std::overflow_error("rational arithmetic overflow (multiplication)");
    return r;
  }
  static Int checked_neg(Int a) { return checked_sub(0, a); }

  void normalize() {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    if (den_ < 0) {
      num_ = checked_neg(num_);
      den_ = checked_neg(den_);
    }
    if (num_ == 0) {
      den_ = 1;
      return;
    }
    Int g = gcd(num_, den_);
    num_ /= g;
    den_ /= g;
  }
};

namespace detail {

inline std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v)
                            : static_cast<unsigned __int128>(v);
  char buf[48];
  int pos = 48;
  while (u != 0) {
    buf[--pos] = static_cast<char>('0' + static_cast<int>(u % 10));
    u /= 10;
  }
  std::string s(buf + pos, buf + 48);
  return neg ? "-" + s : s;
}

inline __int128 int128_from_digits(std::string_view digits, bool negative) {
  if (digits.empty()) throw std::invalid_argument("empty integer literal");
  __int128 v = 0;
  for (char c : digits) {
    if (c < '0' || c > '9')
      throw std::invalid_argument("invalid digit in rational literal");
    __int128 next;
    if (__builtin_mul_overflow(v, static_cast<__int128>(10), &next) ||
        __builtin_add_overflow(next, static_cast<__int128>(c - '0'), &next))
      throw std::overflow_error("integer literal exceeds 128 bits");
    v = next;
  }
  return negative ? -v : v;
}

}  // namespace detail

inline std::string Rational::to_string() const {
  std::string s = detail::int128_to_string(num_);
  if (den_ != 1) s += "/" + detail::int128_to_string(den_);
  return s;
}

inline Rational Rational::parse(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text.empty()) throw std::invalid_argument("empty rational literal");

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto parse_int = [&](std::string_view part) {
      part = trim(part);
      bool neg = false;
      if (!part.empty() && (part[0] == '+' || part[0] == '-')) {
        neg = part[0] == '-';
        part.remove_prefix(1);
      }
      return detail::int128_from_digits(part, neg);
    };
    Int p = parse_int(text.substr(0, slash));
    Int q = parse_int(text.substr(slash + 1));
    if (q == 0) throw std::invalid_argument("rational literal with zero denominator");
    return Rational(p, q);
  }

  bool neg = false;
  if (text[0] == '+' || text[0] == '-') {
    neg = text[0] == '-';
    text.remove_prefix(1);
  }

  std::string digits;
  long exponent = 0;
  std::size_t i = 0;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') digits += text[i++];
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      digits += text[i++];
      --exponent;
    }
  }
  if (digits.empty()) throw std::invalid_argument("invalid rational literal");
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool eneg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
      eneg = text[i] == '-';
      ++i;
    }
    if (i == text.size()) throw std::invalid_argument("invalid exponent in rational literal");
    long e = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      e = e * 10 + (text[i++] - '0');
      if (e > 100000) throw std::overflow_error("exponent out of range");
    }
    exponent += eneg ? -e : e;
  }
  if (i != text.size()) throw std::invalid_argument("trailing characters in rational literal");

  Int num = detail::int128_from_digits(digits, neg);
  Int den = 1;
  for (long k = 0; k < (exponent < 0 ? -exponent : exponent); ++k) {
    Int* side = exponent < 0 ? &den : &num;
    if (__builtin_mul_overflow(*side, static_cast<Int>(10), side))
      throw std::overflow_error("decimal literal exceeds 128 bits");
  }
  return Rational(num, den);
}

inline Rational Rational::from_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc{}) throw std::invalid_argument("unformattable double");
  return parse(std::string_view(buf, res.ptr - buf));
}

}  // namespace soa
