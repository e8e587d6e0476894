#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fpo/group.hpp"

namespace fpo {

// One syllable of a normal-form word in G_1 * ... * G_p * F_k.
//   gid == 0 : free letter, generator `gen` in 0..k-1 with exponent +/-1.
//   gid >= 1 : vertex letter, nontrivial token of G_gid.
struct Syllable {
    int gid = 0;
    int gen = 0;
    int exp = 1;
    Token token = 0;

    static Syllable free_letter(int gen, int exp) {
        Syllable s;
        s.gid = 0;
        s.gen = gen;
        s.exp = exp;
        return s;
    }
    static Syllable vertex_letter(int gid, Token token) {
        Syllable s;
        s.gid = gid;
        s.token = token;
        return s;
    }
    bool is_free() const { return gid == 0; }
    friend bool operator==(const Syllable& a, const Syllable& b) {
        if (a.gid != b.gid) return false;
        if (a.gid == 0) return a.gen == b.gen && a.exp == b.exp;
        return a.token == b.token;
    }
    friend bool operator!=(const Syllable& a, const Syllable& b) { return !(a == b); }
};

// A group element in normal form: alternating syllables where no two adjacent
// syllables are vertex letters of the same factor and no free letter is
// followed by its inverse. Construction normalizes, so equality of elements
// is equality of syllable vectors.
class Word {
public:
    Word() = default;
    Word(const FreeProduct& ctx, std::vector<Syllable> syllables);

    static Word identity() { return Word(); }
    static Word free_gen(int gen, int exp = 1);
    static Word vertex(const FreeProduct& ctx, int gid, Token token);

    const std::vector<Syllable>& syllables() const { return syl_; }
    bool is_identity() const { return syl_.empty(); }
    size_t size() const { return syl_.size(); }

    // True when the element is hyperbolic in every (G, {G_i}, F_k)-tree:
    // the cyclically reduced core has >= 2 syllables or is a single free
    // letter. Single vertex letters and the identity are elliptic.
    bool is_hyperbolic(const FreeProduct& ctx) const;

    friend bool operator==(const Word& a, const Word& b) { return a.syl_ == b.syl_; }
    friend bool operator!=(const Word& a, const Word& b) { return !(a == b); }

    std::string str(const FreeProduct& ctx) const;

private:
    std::vector<Syllable> syl_;
    friend Word multiply(const FreeProduct&, const Word&, const Word&);
    friend Word invert(const FreeProduct&, const Word&);
};

// Normal-form arithmetic.
Word multiply(const FreeProduct& ctx, const Word& a, const Word& b);
Word invert(const FreeProduct& ctx, const Word& a);
// g u g^-1
Word conjugate(const FreeProduct& ctx, const Word& u, const Word& g);

// Returns (core, c) with u = c * core * c^-1 and core cyclically reduced:
// its first and last syllables neither cancel nor lie in the same vertex
// group. The identity and single syllables are their own cores.
std::pair<Word, Word> cyclic_reduce(const FreeProduct& ctx, const Word& u);

// Deterministic pseudo-random normal-form word with `length` syllable draws
// (the normalized result may be shorter).
Word random_word(const FreeProduct& ctx, uint64_t seed, int length);

// Parse a compact debug form: whitespace-separated syllables "a", "a^-1",
// "b", ... for free generators and "v<gid>:<token>" for vertex letters.
Word parse_word(const FreeProduct& ctx, const std::string& text);

// All normal-form words with at most `max_syllables` syllables, drawing
// vertex letters from the full factor (factors must be finite). Used by the
// brute-force comparisons; grows fast, keep budgets small.
std::vector<Word> enumerate_words(const FreeProduct& ctx, int max_syllables);

// Exact conjugacy test: cyclically reduced words of syllable length >= 2 are
// conjugate iff they are cyclic rotations of one another; single vertex
// letters iff conjugate inside their factor; single free letters iff equal.
bool conjugate_words(const FreeProduct& ctx, const Word& u, const Word& v);

// ---------------------------------------------------------------------------
// Automorphisms preserving the factor system: an automorphism permutes the
// vertex groups up to conjugacy. Its data is one image word per free
// generator and, per factor, a target factor, a conjugating word, and an
// isomorphism G_src -> G_target on letters.
// ---------------------------------------------------------------------------

// Letter-level isomorphism between two factors. Finite factors carry an
// explicit token table; infinite cyclic factors are t -> z_power * t with
// z_power in {+1, -1}.
struct TokenMap {
    int src = 0;
    int dst = 0;
    std::vector<Token> table;  // finite factors: index by token
    int z_power = 1;           // infinite cyclic factors

    Token apply(const FreeProduct& ctx, Token t) const;
    bool is_identity() const;
};

TokenMap identity_token_map(const FreeProduct& ctx, int gid);
// f after g (so g.dst must equal f.src).
TokenMap compose(const FreeProduct& ctx, const TokenMap& f, const TokenMap& g);
TokenMap invert(const FreeProduct& ctx, const TokenMap& f);
// Empty when m is a well-formed isomorphism G_src -> G_dst; otherwise a list
// of violations (wrong sizes, not bijective, not a homomorphism, ...).
std::vector<std::string> check_token_map(const FreeProduct& ctx, const TokenMap& m);

// How one factor moves: g in G_src maps to conj * letters(g) * conj^-1.
struct FactorAction {
    Word conj;
    TokenMap letters;
};

class Automorphism {
public:
    // actions[i] describes factor i+1; gen_images[j] the j-th free generator.
    // Validates structure (targets form a permutation, token maps are
    // isomorphisms, conjugators are normal forms over ctx).
    Automorphism(std::shared_ptr<const FreeProduct> ctx, std::vector<Word> gen_images,
                 std::vector<FactorAction> actions);
    static Automorphism identity(std::shared_ptr<const FreeProduct> ctx);

    const FreeProduct& ctx() const { return *ctx_; }
    const std::shared_ptr<const FreeProduct>& ctx_ptr() const { return ctx_; }
    const Word& gen_image(int gen) const { return gen_images_.at(gen); }
    const FactorAction& action(int gid) const { return actions_.at(gid - 1); }
    int target(int gid) const { return action(gid).letters.dst; }

    Word apply(const Word& w) const;

private:
    std::shared_ptr<const FreeProduct> ctx_;
    std::vector<Word> gen_images_;
    std::vector<FactorAction> actions_;
};

// f after g.
Automorphism compose(const Automorphism& f, const Automorphism& g);
// n >= 0 (no inverse computation; pass the inverse explicitly if needed).
Automorphism power(const Automorphism& f, int n);
// True when f(g(x)) == x and g(f(x)) == x on all generators and factor
// letters (sampled for infinite factors). An inexpensive certificate that
// the pair really is an automorphism and not just an endomorphism.
bool verify_inverse_pair(const Automorphism& f, const Automorphism& g);

}  // namespace fpo
