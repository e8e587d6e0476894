#include <cmath>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "fpo/metric.hpp"

using namespace fpo;
using G = MetricGraphOfGroups;

namespace {

// The multiset of candidate classes, as parsed words (compared through the
// same dedup notion the enumeration uses: conjugacy up to inversion).
bool same_class(const FreeProduct& ctx, const Word& u, const Word& v) {
    return conjugate_words(ctx, u, v) || conjugate_words(ctx, u, invert(ctx, v));
}

bool matches(const MarkedGraph& X, const std::vector<std::string>& expected) {
    auto cs = enumerate_candidates(X);
    if (cs.size() != expected.size()) return false;
    for (const auto& s : expected) {
        Word w = fx::W(*X.ctx, s);
        bool found = false;
        for (const auto& c : cs)
            if (same_class(*X.ctx, c.word, w)) found = true;
        if (!found) return false;
    }
    return true;
}

// A candidate axis passes through no point of the quotient three times:
// every vertex is visited at most twice and every edge crossed at most twice.
bool no_triple_points(const G& g, const Path& loop) {
    std::map<int, int> vvisit, ecross;
    for (const PathAtom& atom : loop.atoms()) {
        const Seg* s = std::get_if<Seg>(&atom);
        if (!s) continue;
        ++vvisit[g.from(s->oedge)];
        ++ecross[G::edge_of(s->oedge)];
    }
    for (auto& [v, n] : vvisit)
        if (n > 2) return false;
    for (auto& [e, n] : ecross)
        if (n > 2) return false;
    return true;
}

Automorphism f2_golden() {
    auto ctx = fx::F2();
    return Automorphism(ctx, {fx::W(ctx, "b"), fx::W(ctx, "a b")}, {});
}
Automorphism f2_golden_inv() {
    auto ctx = fx::F2();
    return Automorphism(ctx, {fx::W(ctx, "b a^-1"), fx::W(ctx, "a")}, {});
}
Automorphism f2_swap() {
    auto ctx = fx::F2();
    return Automorphism(ctx, {fx::W(ctx, "b"), fx::W(ctx, "a")}, {});
}

}  // namespace

TEST_CASE("candidate shapes on the basic graphs") {
    auto R = fx::rose2(Rat(1), Rat(1));
    CHECK(matches(R, {"a", "b", "a b", "a b^-1"}));
    auto cs = enumerate_candidates(R);
    int loops = 0, eights = 0;
    for (const auto& c : cs) {
        if (c.shape == CandidateShape::SimpleLoop) ++loops;
        if (c.shape == CandidateShape::FigureEight) ++eights;
        CHECK(no_triple_points(R.g, c.loop));
        CHECK(c.word.is_hyperbolic(*R.ctx));
    }
    CHECK(loops == 2);
    CHECK(eights == 2);

    auto T = fx::theta(Rat(1), Rat(1), Rat(1));
    CHECK(matches(T, {"a", "b", "a b^-1"}));
    for (const auto& c : enumerate_candidates(T)) CHECK(c.shape == CandidateShape::SimpleLoop);

    auto D = fx::dumbbell_edge(Rat(1));
    auto dc = enumerate_candidates(D);
    REQUIRE(dc.size() == 1);
    CHECK(dc.front().shape == CandidateShape::DoublyDegenerateBarbell);
    CHECK(same_class(*D.ctx, dc.front().word, fx::W(*D.ctx, "v1:1 v2:1")));
    CHECK(translation_length(D, dc.front().word) == Rat(2));

    auto S = fx::star_rose(Rat(1), Rat(1), Rat(1));
    CHECK(matches(S, {"a", "v1:1 a", "v2:1 a", "v1:1 v2:1"}));

    auto L = fx::labeled_loop(Rat(1));
    CHECK(matches(L, {"a", "v1:1 a"}));

    auto P = fx::lollipop(Rat(1, 2), Rat(1));
    CHECK(matches(P, {"a", "v1:1 a"}));
}

TEST_CASE("shortest hyperbolic class") {
    auto R = fx::rose2(Rat(1, 2), Rat(1, 2));
    auto [w, len] = shortest_hyperbolic(R);
    CHECK(len == Rat(1, 2));
    CHECK(w.size() == 1);

    auto D = fx::dumbbell_edge(Rat(1));
    auto [wd, ld] = shortest_hyperbolic(D);
    CHECK(ld == Rat(2));
    CHECK(same_class(*D.ctx, wd, fx::W(*D.ctx, "v1:1 v2:1")));

    auto R2 = rescaled(R, Rat(2));
    CHECK(shortest_hyperbolic(R2).second == Rat(1));
}

TEST_CASE("stretch factors and distance on roses") {
    auto A = fx::rose2(Rat(1, 2), Rat(1, 2));
    auto B = fx::rose2(Rat(1, 3), Rat(2, 3));
    Stretch r = stretch_right(A, B);
    CHECK(r.factor == Rat(4, 3));
    CHECK(same_class(*A.ctx, r.witness.word, fx::W(*A.ctx, "b")));
    Stretch l = stretch_left(A, B);
    CHECK(l.factor == Rat(3, 2));
    CHECK(same_class(*A.ctx, l.witness.word, fx::W(*A.ctx, "a")));
    Distance d = distance(A, B);
    CHECK(d.lambda == Rat(2));
    CHECK(d.log_value == doctest::Approx(std::log(2.0)));
    CHECK(no_triple_points(A.g, r.witness.loop));

    Distance same = distance(A, A);
    CHECK(same.lambda == Rat(1));
    CHECK(same.right.factor == Rat(1));

    auto D1 = fx::dumbbell_edge(Rat(1));
    auto D3 = fx::dumbbell_edge(Rat(3));
    CHECK(stretch_right(D1, D3).factor == Rat(3));
    CHECK(stretch_left(D1, D3).factor == Rat(1, 3));
    CHECK(distance(D1, D3).lambda == Rat(1));

    CHECK_THROWS_AS(stretch_right(A, D1), domain_error);
}

TEST_CASE("brute force agrees with candidates on fixture pairs") {
    auto A = fx::rose2(Rat(1, 2), Rat(1, 2));
    auto B = fx::rose2(Rat(1, 3), Rat(2, 3));
    CHECK(brute_force_stretch(A, B, 6) == stretch_right(A, B).factor);
    CHECK(brute_force_stretch(B, A, 6) == stretch_right(B, A).factor);

    auto T = fx::theta(Rat(1, 4), Rat(1, 2), Rat(1));
    CHECK(brute_force_stretch(A, T, 6) == stretch_right(A, T).factor);
    CHECK(brute_force_stretch(T, A, 6) == stretch_right(T, A).factor);

    auto S1 = fx::star_rose(Rat(1), Rat(1), Rat(1));
    auto S2 = fx::star_rose(Rat(1, 2), Rat(2), Rat(3));
    CHECK(brute_force_stretch(S1, S2, 6) == stretch_right(S1, S2).factor);
    CHECK(brute_force_stretch(S2, S1, 6) == stretch_right(S2, S1).factor);

    auto P1 = fx::lollipop(Rat(1), Rat(1));
    auto P2 = fx::lollipop(Rat(1, 3), Rat(2));
    CHECK(brute_force_stretch(P1, P2, 6) == stretch_right(P1, P2).factor);

    auto L1 = fx::labeled_loop(Rat(1));
    auto L2 = fx::labeled_loop(Rat(5, 2));
    CHECK(brute_force_stretch(L1, L2, 4) == stretch_right(L1, L2).factor);

    // monotone in the budget
    CHECK(brute_force_stretch(A, T, 4) <= brute_force_stretch(A, T, 6));
    CHECK_THROWS_AS(brute_force_stretch(A, B, 0), domain_error);
    CHECK_THROWS_AS(brute_force_stretch(A, B, 100), domain_error);
}

TEST_CASE("displacement of automorphisms") {
    auto ctx = fx::F2();
    auto X = fx::rose2(Rat(1, 2), Rat(1, 2));
    CHECK(displacement(X, Automorphism::identity(ctx)) == Rat(1));
    CHECK(displacement(X, f2_golden()) == Rat(2));

    // finite order realized as an isometry: displacement 1 at the symmetric point
    CHECK(displacement(X, f2_swap()) == Rat(1));
    auto D = fx::dumbbell_edge(Rat(1));
    auto dctx = fx::Z2_Z2();
    TokenMap swap12{1, 2, {0, 1}, 1};
    TokenMap swap21{2, 1, {0, 1}, 1};
    Automorphism sigma(dctx, {},
                       {FactorAction{Word::identity(), swap12},
                        FactorAction{Word::identity(), swap21}});
    CHECK(displacement(D, sigma) == Rat(1));

    auto P = fx::lollipop(Rat(1, 2), Rat(1));
    auto pctx = fx::Z2_Z();
    Automorphism twist(pctx, {fx::W(pctx, "v1:1 a")},
                       {FactorAction{Word::identity(), identity_token_map(*pctx, 1)}});
    CHECK(displacement(P, twist) == Rat(2));
}

TEST_CASE("precomposing the marking: twisted points") {
    auto X = fx::rose2(Rat(1, 2), Rat(1, 3));
    Automorphism phi = f2_golden(), psi = f2_golden_inv();
    MarkedGraph Y = twisted(X, phi, psi);
    for (uint64_t s = 0; s < 20; ++s) {
        Word w = random_word(*X.ctx, 700 + s, 6);
        CHECK(translation_length(Y, w) == translation_length(X, phi.apply(w)));
    }
    CHECK(stretch_right(X, Y).factor == displacement(X, phi));

    // invariance of the stretch under precomposition of both points
    auto A = fx::rose2(Rat(1, 2), Rat(1, 2));
    auto B = fx::theta(Rat(1, 4), Rat(1, 2), Rat(1));
    CHECK(stretch_right(twisted(A, phi, psi), twisted(B, phi, psi)).factor ==
          stretch_right(A, B).factor);
    CHECK(distance(twisted(A, phi, psi), twisted(B, phi, psi)).lambda == distance(A, B).lambda);

    // a label-permuting precomposition relabels the graph and moves the basepoint
    auto D = fx::dumbbell_edge(Rat(2));
    auto dctx = fx::Z2_Z2();
    TokenMap swap12{1, 2, {0, 1}, 1};
    TokenMap swap21{2, 1, {0, 1}, 1};
    Automorphism sigma(dctx, {},
                       {FactorAction{Word::identity(), swap12},
                        FactorAction{Word::identity(), swap21}});
    MarkedGraph DY = twisted(D, sigma, sigma);
    CHECK(validate(DY).empty());
    Word st = fx::W(dctx, "v1:1 v2:1");
    CHECK(translation_length(DY, st) == translation_length(D, sigma.apply(st)));

    CHECK_THROWS_AS(twisted(X, phi, phi), domain_error);
}

TEST_CASE("metric axioms on normalized points") {
    auto normalize = [](MarkedGraph X) {
        Rat c = covolume(X);
        return rescaled(X, Rat(1) / c);
    };
    Automorphism phi = f2_golden(), psi = f2_golden_inv(), sw = f2_swap();
    std::vector<MarkedGraph> pts;
    pts.push_back(normalize(fx::rose2(Rat(1, 2), Rat(1, 2))));
    pts.push_back(normalize(fx::rose2(Rat(1, 3), Rat(2, 3))));
    pts.push_back(normalize(fx::theta(Rat(1, 4), Rat(1, 2), Rat(1))));
    pts.push_back(normalize(twisted(fx::rose2(Rat(1), Rat(2)), phi, psi)));
    pts.push_back(normalize(twisted(fx::theta(Rat(1), Rat(1), Rat(2)), sw, sw)));

    for (const auto& A : pts)
        for (const auto& B : pts) {
            Rat lam = distance(A, B).lambda;
            CHECK(lam == distance(B, A).lambda);
            CHECK(lam >= Rat(1));
            CHECK((lam == Rat(1)) == equal_candidate_lengths(A, B));
            for (const auto& C : pts)
                CHECK(stretch_right(A, C).factor <=
                      stretch_right(A, B).factor * stretch_right(B, C).factor);
        }

    // same point presented through different data: swapping the equal petals
    auto Xs = fx::rose2(Rat(1, 2), Rat(1, 2));
    MarkedGraph Ys = twisted(Xs, sw, sw);
    CHECK(distance(Xs, Ys).lambda == Rat(1));
    CHECK(equal_candidate_lengths(Xs, Ys));
    // with unequal petals the same twist moves the point
    auto Xu = fx::rose2(Rat(1, 3), Rat(2, 3));
    MarkedGraph Yu = twisted(Xu, sw, sw);
    CHECK(distance(Xu, Yu).lambda == Rat(4));
    CHECK_FALSE(equal_candidate_lengths(Xu, Yu));
}

TEST_CASE("length vectors separate distinct fixture points") {
    std::vector<MarkedGraph> pts;
    pts.push_back(fx::rose2(Rat(1, 2), Rat(1, 2)));
    pts.push_back(fx::rose2(Rat(1, 3), Rat(2, 3)));
    pts.push_back(fx::theta(Rat(1, 4), Rat(1, 2), Rat(1)));
    pts.push_back(twisted(fx::rose2(Rat(1, 2), Rat(1, 2)), f2_golden(), f2_golden_inv()));
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j)
            CHECK_FALSE(equal_candidate_lengths(pts[i], pts[j]));
}
