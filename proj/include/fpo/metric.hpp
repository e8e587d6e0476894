#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fpo/graph.hpp"

namespace fpo {

// ---------------------------------------------------------------------------
// Candidates. The maximal stretch between two points of the deformation space
// is attained on conjugacy classes whose axis projects to one of five shapes
// in the quotient graph: an embedded circle, two circles meeting at one point
// (figure eight), two disjoint circles joined by an embedded arc (barbell),
// and the degenerate barbells where one or both circles are replaced by a
// nontrivial letter at a labeled vertex. The list below is finite, complete
// for the maximum, and deduplicated up to inversion and cyclic rotation.
// ---------------------------------------------------------------------------

enum class CandidateShape {
    SimpleLoop,
    FigureEight,
    Barbell,
    SinglyDegenerateBarbell,
    DoublyDegenerateBarbell,
};

std::string shape_name(CandidateShape s);

struct Candidate {
    CandidateShape shape;
    Word word;                   // cyclically reduced reading of the loop
    Path loop;                   // the shaped loop itself (closed, tight)
    std::vector<Token> letters;  // elliptic letters used by degenerate shapes
};

// One representative per class up to inversion and cyclic rotation; degenerate
// shapes use a single sampled nontrivial letter per labeled vertex (the
// length ratios below do not depend on the choice).
std::vector<Candidate> enumerate_candidates(const MarkedGraph& X);

// Minimal translation length over the candidates, which is the minimum over
// all hyperbolic classes.
std::pair<Word, Rat> shortest_hyperbolic(const MarkedGraph& X);

struct Stretch {
    Rat factor;
    Candidate witness;
};

// Right stretching factor: max over candidates w of A of l_B(w) / l_A(w).
// Throws on signature mismatch.
Stretch stretch_right(const MarkedGraph& A, const MarkedGraph& B);
// Left stretching factor: max over candidates w of B of l_A(w) / l_B(w).
Stretch stretch_left(const MarkedGraph& A, const MarkedGraph& B);

struct Distance {
    Rat lambda;        // Λ = Λ_R · Λ_L, the symmetrized multiplicative distance
    double log_value;  // log Λ, for display; comparisons use lambda exactly
    Stretch right, left;
};

Distance distance(const MarkedGraph& A, const MarkedGraph& B);

// Testing oracle: max of l_B(w) / l_A(w) over all cyclically reduced
// hyperbolic normal forms with at most `syllable_budget` syllables, one word
// per class up to inversion and rotation. Vertex letters are enumerated
// exhaustively for finite factors and sampled for infinite ones. The budget
// is capped to guard against combinatorial explosion.
Rat brute_force_stretch(const MarkedGraph& A, const MarkedGraph& B, int syllable_budget);

// Λ_R(X, Φ·X) where Φ·X is X with the marking precomposed by phi; computed
// directly as max over candidates w of X of l_X(phi(w)) / l_X(w).
Rat displacement(const MarkedGraph& X, const Automorphism& phi);

// The point Φ·X materialized: same metric graph, marking precomposed by phi,
// so that l(w) at the new point equals l_X(phi(w)). Vertex labels are carried
// through phi's factor permutation and the basepoint convention is restored.
// Requires the inverse automorphism; throws unless the pair verifies.
MarkedGraph twisted(const MarkedGraph& X, const Automorphism& phi, const Automorphism& phi_inv);

// Same p, k and factor orders (words then make sense at both points).
bool same_signature(const FreeProduct& a, const FreeProduct& b);

// Whether the candidate length vectors agree: every candidate word of either
// point has equal translation length at both. Equivalent to the two points
// being the same point of the deformation space.
bool equal_candidate_lengths(const MarkedGraph& A, const MarkedGraph& B);

}  // namespace fpo
