#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <iosfwd>
#include <string>

namespace fpo {

// Exact rational number. Thin wrapper around GMP's mpq_class that keeps the
// value canonicalized and provides "num/den" serialization and hashing.
class Rat {
public:
    Rat() : q_(0) {}
    Rat(long n) : q_(n) {}
    Rat(long n, long d) : q_(n, d == 0 ? 1 : d) {
        if (d == 0) throw std::domain_error("zero denominator");
        canon();
    }
    explicit Rat(const mpq_class& q) : q_(q) { canon(); }

    // Parses "num", "num/den". Throws std::invalid_argument on malformed input.
    static Rat parse(const std::string& s);

    const mpq_class& raw() const { return q_; }

    Rat operator+(const Rat& o) const { return Rat(mpq_class(q_ + o.q_)); }
    Rat operator-(const Rat& o) const { return Rat(mpq_class(q_ - o.q_)); }
    Rat operator*(const Rat& o) const { return Rat(mpq_class(q_ * o.q_)); }
    Rat operator/(const Rat& o) const;
    Rat operator-() const { return Rat(mpq_class(-q_)); }
    Rat& operator+=(const Rat& o) { q_ += o.q_; return *this; }
    Rat& operator-=(const Rat& o) { q_ -= o.q_; return *this; }
    Rat& operator*=(const Rat& o) { q_ *= o.q_; canon(); return *this; }
    Rat& operator/=(const Rat& o) { *this = *this / o; return *this; }

    bool operator==(const Rat& o) const { return q_ == o.q_; }
    bool operator!=(const Rat& o) const { return q_ != o.q_; }
    bool operator<(const Rat& o) const { return q_ < o.q_; }
    bool operator<=(const Rat& o) const { return q_ <= o.q_; }
    bool operator>(const Rat& o) const { return q_ > o.q_; }
    bool operator>=(const Rat& o) const { return q_ >= o.q_; }

    int sign() const { return sgn(q_); }
    bool is_zero() const { return sgn(q_) == 0; }
    Rat abs() const { return Rat(mpq_class(::abs(q_))); }
    Rat inv() const;

    // Exact string, always "num/den" with den >= 1 ("3/1", "-1/2").
    std::string str() const;
    // Decimal approximation for display only.
    double to_double() const { return q_.get_d(); }

    size_t hash() const;

private:
    void canon() { q_.canonicalize(); }
    mpq_class q_;
};

std::ostream& operator<<(std::ostream& os, const Rat& r);

// Best rational approximation of x with denominator <= max_den
// (continued-fraction convergent). Used for metric snapshots.
Rat rat_from_double(double x, long max_den);

Rat min(const Rat& a, const Rat& b);
Rat max(const Rat& a, const Rat& b);

}  // namespace fpo

template <>
struct std::hash<fpo::Rat> {
    size_t operator()(const fpo::Rat& r) const { return r.hash(); }
};
