#include "fpo/algebraic.hpp"

#include <gmpxx.h>

#include <stdexcept>

namespace fpo {

RatMatrix transpose(const RatMatrix& m) {
    RatMatrix t(m.size());
    for (int i = 0; i < m.size(); ++i)
        for (int j = 0; j < m.size(); ++j) t.at(j, i) = m.at(i, j);
    return t;
}

std::pair<Rat, Rat> row_sum_range(const RatMatrix& m) {
    if (m.size() == 0) throw std::domain_error("empty matrix has no spectral radius");
    Rat lo, hi;
    for (int i = 0; i < m.size(); ++i) {
        Rat s;
        for (int j = 0; j < m.size(); ++j) {
            if (m.at(i, j).sign() < 0) throw std::domain_error("matrix has a negative entry");
            s += m.at(i, j);
        }
        if (i == 0 || s < lo) lo = s;
        if (i == 0 || hi < s) hi = s;
    }
    return {lo, hi};
}

bool exceeds_spectral_radius(const RatMatrix& m, const Rat& x) {
    const int n = m.size();
    // Eliminate x I - m in place; every pivot is a ratio of consecutive
    // leading principal minors, so all pivots positive <=> all minors
    // positive <=> nonsingular M-matrix <=> x > rho(m). A nonpositive pivot
    // settles the answer immediately, so no pivoting is ever needed.
    std::vector<Rat> a((size_t)(n * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (m.at(i, j).sign() < 0) throw std::domain_error("matrix has a negative entry");
            a[(size_t)(i * n + j)] = (i == j ? x - m.at(i, j) : -m.at(i, j));
        }
    for (int k = 0; k < n; ++k) {
        const Rat& piv = a[(size_t)(k * n + k)];
        if (!(piv.sign() > 0)) return false;
        for (int i = k + 1; i < n; ++i) {
            Rat factor = a[(size_t)(i * n + k)] / piv;
            if (factor.is_zero()) continue;
            for (int j = k; j < n; ++j)
                a[(size_t)(i * n + j)] -= factor * a[(size_t)(k * n + j)];
        }
    }
    return true;
}

SpectralBracket spectral_bracket(const RatMatrix& m, const Rat& tol) {
    if (!(tol.sign() > 0)) throw std::domain_error("bracket tolerance must be positive");
    auto [lo, hi] = row_sum_range(m);
    if (lo == hi) return SpectralBracket{lo, hi, true};
    // Invariant: lo <= rho (x <= rho iff not exceeds) and rho <= hi (initial
    // hi is the max row sum; afterwards only certified upper bounds).
    while (tol < hi - lo) {
        Rat mid = (lo + hi) / Rat(2);
        if (exceeds_spectral_radius(m, mid))
            hi = mid;
        else
            lo = mid;
    }
    return SpectralBracket{lo, hi, false};
}

namespace {

// Best rational approximation with denominator <= cap: walk the continued
// fraction of x and return the last convergent that fits.
Rat snap_to_denominator(const mpq_class& x, const mpz_class& cap) {
    mpz_class p0 = 1, q0 = 0;  // h_{-1}
    mpz_class p1 = 0, q1 = 1;  // h_0 pre-seed so the loop emits h_0 first
    mpz_class num = x.get_num(), den = x.get_den();
    bool neg = false;
    if (num < 0) {
        neg = true;
        num = -num;
    }
    while (den != 0) {
        mpz_class a = num / den;
        mpz_class p2 = a * p1 + p0;
        mpz_class q2 = a * q1 + q0;
        if (q2 > cap) break;
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        mpz_class r = num - a * den;
        num = den;
        den = r;
    }
    if (q1 == 0) throw std::domain_error("no rational below the denominator cap");
    mpq_class out(neg ? mpz_class(-p1) : p1, q1);
    out.canonicalize();
    return Rat(out);
}

}  // namespace

std::vector<Rat> perron_vector(const RatMatrix& m) {
    const int n = m.size();
    if (n == 0) throw std::domain_error("empty matrix has no dominant vector");
    const int prec = 256;
    std::vector<mpf_class> a((size_t)(n * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            a[(size_t)(i * n + j)] = mpf_class(m.at(i, j).raw(), prec);
            if (i == j) a[(size_t)(i * n + j)] += 1;  // m + I, primitive
        }
    std::vector<mpf_class> v((size_t)n, mpf_class(1, prec)), w((size_t)n, mpf_class(0, prec));
    mpf_class eps(0, prec);
    mpf_div_2exp(eps.get_mpf_t(), mpf_class(1, prec).get_mpf_t(), 180);
    for (int round = 0; round < 2000; ++round) {
        mpf_class total(0, prec);
        for (int i = 0; i < n; ++i) {
            w[(size_t)i] = 0;
            for (int j = 0; j < n; ++j) w[(size_t)i] += a[(size_t)(i * n + j)] * v[(size_t)j];
            total += w[(size_t)i];
        }
        if (total == 0) throw std::domain_error("dominant vector iteration collapsed");
        mpf_class drift(0, prec);
        for (int i = 0; i < n; ++i) {
            w[(size_t)i] /= total;
            mpf_class d = w[(size_t)i] - v[(size_t)i];
            drift += abs(d);
            v[(size_t)i] = w[(size_t)i];
        }
        if (round > 0 && drift < eps) break;
    }
    const mpz_class cap = mpz_class("1000000000000");
    std::vector<Rat> out;
    out.reserve((size_t)n);
    Rat sum;
    for (int i = 0; i < n; ++i) {
        Rat r = snap_to_denominator(mpq_class(v[(size_t)i]), cap);
        if (!(r.sign() > 0))
            throw std::domain_error("dominant vector not strictly positive (reducible matrix?)");
        sum += r;
        out.push_back(std::move(r));
    }
    for (Rat& r : out) r /= sum;
    return out;
}

}  // namespace fpo
