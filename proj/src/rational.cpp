#include "fpo/rational.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace fpo {

Rat Rat::parse(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational");
    mpq_class q;
    if (q.set_str(s, 10) != 0)
        throw std::invalid_argument("malformed rational: " + s);
    if (q.get_den() == 0)
        throw std::invalid_argument("zero denominator: " + s);
    q.canonicalize();
    return Rat(q);
}

Rat Rat::operator/(const Rat& o) const {
    if (o.is_zero()) throw std::domain_error("rational division by zero");
    return Rat(mpq_class(q_ / o.q_));
}

Rat Rat::inv() const {
    if (is_zero()) throw std::domain_error("inverse of zero");
    mpq_class r;
    mpq_inv(r.get_mpq_t(), q_.get_mpq_t());
    return Rat(r);
}

std::string Rat::str() const {
    if (q_.get_den() == 1) return q_.get_num().get_str();
    return q_.get_num().get_str() + "/" + q_.get_den().get_str();
}

size_t Rat::hash() const {
    size_t h = 1469598103934665603ull;
    auto mix = [&h](const mpz_class& z) {
        h ^= std::hash<std::string>()(z.get_str());
        h *= 1099511628211ull;
    };
    mix(q_.get_num());
    mix(q_.get_den());
    return h;
}

std::ostream& operator<<(std::ostream& os, const Rat& r) {
    return os << r.str();
}

Rat rat_from_double(double x, long max_den) {
    if (!std::isfinite(x)) throw std::domain_error("non-finite double");
    bool neg = x < 0;
    if (neg) x = -x;
    // Stern-Brocot style continued fraction with bounded denominator.
    long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    double v = x;
    for (int it = 0; it < 64; ++it) {
        double fa = std::floor(v);
        if (fa > 1e15) break;
        long a = static_cast<long>(fa);
        if (q1 != 0 && a > (max_den - q0) / q1) break;
        long p2 = a * p1 + p0, q2 = a * q1 + q0;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        double frac = v - fa;
        if (frac < 1e-14) break;
        v = 1.0 / frac;
    }
    if (q1 == 0) { p1 = static_cast<long>(std::llround(x)); q1 = 1; }
    Rat r(p1, q1);
    return neg ? -r : r;
}

Rat min(const Rat& a, const Rat& b) { return a <= b ? a : b; }
Rat max(const Rat& a, const Rat& b) { return a >= b ? a : b; }

}  // namespace fpo
