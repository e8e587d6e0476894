#pragma once

#include <vector>

#include "fpo/rational.hpp"

namespace fpo {

// ---------------------------------------------------------------------------
// Exact spectral bounds for small nonnegative matrices (transition matrices
// of graph self-maps). The predicate layer is exact rational arithmetic; the
// eigenvector layer is high-precision floating point snapped back to
// rationals, used only to propose metrics whose quality the exact layer then
// certifies.
// ---------------------------------------------------------------------------

class RatMatrix {
public:
    explicit RatMatrix(int n) : n_(n), a_((size_t)(n * n)) {}

    int size() const { return n_; }
    Rat& at(int i, int j) { return a_.at((size_t)(i * n_ + j)); }
    const Rat& at(int i, int j) const { return a_.at((size_t)(i * n_ + j)); }

    friend bool operator==(const RatMatrix& x, const RatMatrix& y) {
        return x.n_ == y.n_ && x.a_ == y.a_;
    }

private:
    int n_;
    std::vector<Rat> a_;
};

RatMatrix transpose(const RatMatrix& m);

// Row sum extremes: for a nonnegative matrix the spectral radius lies
// between the smallest and the largest row sum.
std::pair<Rat, Rat> row_sum_range(const RatMatrix& m);

// True iff x strictly exceeds the spectral radius of the entrywise
// nonnegative matrix m. Exact: x I - m is then a nonsingular M-matrix,
// equivalent to all leading principal minors being positive, which Gaussian
// elimination over the rationals decides without rounding.
bool exceeds_spectral_radius(const RatMatrix& m, const Rat& x);

// Rational bracket lo <= rho <= hi with hi - lo <= tol (or exact when the
// row sums agree, which pins rho exactly).
struct SpectralBracket {
    Rat lo, hi;
    bool exact = false;
};
SpectralBracket spectral_bracket(const RatMatrix& m, const Rat& tol);

// Strictly positive rational approximation of the dominant eigenvector of an
// irreducible nonnegative matrix, normalized to sum 1. Power iteration on
// m + I (primitive whenever m is irreducible) in 256-bit floating point,
// snapped to bounded-denominator rationals by continued fractions. Throws
// when the result fails to be strictly positive.
std::vector<Rat> perron_vector(const RatMatrix& m);

}  // namespace fpo
