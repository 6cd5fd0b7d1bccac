// Minimal stand-in for the parts of the Crypto++ Integer API used by
// generated programs, backed by GMP. Test use only.

#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <ostream>
#include <random>
#include <vector>

namespace CryptoPP {

class AutoSeededRandomPool {
 public:
  AutoSeededRandomPool() : state_(gmp_randinit_mt) {
    std::random_device rd;
    state_.seed((static_cast<unsigned long>(rd()) << 32) ^ rd());
  }
  gmp_randclass& state() { return state_; }

 private:
  gmp_randclass state_;
};

class Integer {
 public:
  Integer() : v_(0) {}
  explicit Integer(const char* decimal) : v_(decimal, 10) {}
  Integer(const unsigned char* bytes, std::size_t len) {
    mpz_import(v_.get_mpz_t(), len, 1, 1, 1, 0, bytes);
  }
  // Uniform in [lo, hi].
  Integer(AutoSeededRandomPool& rng, const Integer& lo, const Integer& hi) {
    mpz_class span = hi.v_ - lo.v_ + 1;
    v_ = lo.v_ + rng.state().get_z_range(span);
  }

  static const Integer& One() {
    static const Integer one(mpz_class(1));
    return one;
  }
  static const Integer& Two() {
    static const Integer two(mpz_class(2));
    return two;
  }
  static Integer Power2(unsigned bits) {
    mpz_class r;
    mpz_ui_pow_ui(r.get_mpz_t(), 2, bits);
    return Integer(r);
  }

  std::size_t MinEncodedSize() const {
    std::size_t n = (mpz_sizeinbase(v_.get_mpz_t(), 2) + 7) / 8;
    return n == 0 ? 1 : n;
  }
  // Big-endian, left-padded with zeros to `len` bytes.
  void Encode(unsigned char* out, std::size_t len) const {
    std::size_t count = 0;
    std::vector<unsigned char> tmp(MinEncodedSize());
    mpz_export(tmp.data(), &count, 1, 1, 1, 0, v_.get_mpz_t());
    std::size_t pad = len - count;
    for (std::size_t i = 0; i < pad; ++i) out[i] = 0;
    for (std::size_t i = 0; i < count; ++i) out[pad + i] = tmp[i];
  }

  friend Integer operator-(const Integer& a, const Integer& b) { return Integer(mpz_class(a.v_ - b.v_)); }
  friend std::ostream& operator<<(std::ostream& os, const Integer& a) { return os << a.v_.get_str(10) << '.'; }
  friend Integer a_exp_b_mod_c(const Integer& a, const Integer& b, const Integer& c);

 private:
  explicit Integer(const mpz_class& v) : v_(v) {}
  mpz_class v_;
};

inline Integer a_exp_b_mod_c(const Integer& a, const Integer& b, const Integer& c) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), a.v_.get_mpz_t(), b.v_.get_mpz_t(), c.v_.get_mpz_t());
  return Integer(r);
}

}  // namespace CryptoPP
