// Folds, folding paths, stretch geodesics, and the bare surgery helpers.
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "fpo/folding.hpp"
#include "fpo/metric.hpp"

using namespace fpo;
using G = MetricGraphOfGroups;

namespace {

Automorphism f2_golden() {
    auto ctx = fx::F2();
    return Automorphism(ctx, {fx::W(ctx, "b"), fx::W(ctx, "a b")}, {});
}
Automorphism f2_golden_inv() {
    auto ctx = fx::F2();
    return Automorphism(ctx, {fx::W(ctx, "b a^-1"), fx::W(ctx, "a")}, {});
}

// theta(1,1,1) onto rose2(1,1): e0 and e1 both cross the first petal, e2 the
// second. Structurally valid directing map (not a change of marking) with one
// parallel gate at each endpoint; drives the partial-fold tests.
GraphMap theta_onto_rose() {
    auto A = fx::share(fx::theta(Rat(1), Rat(1), Rat(1)));
    auto B = fx::share(fx::rose2(Rat(1), Rat(1)));
    GraphPoint bp = GraphPoint::at_vertex(B->basepoint);
    std::vector<Path> ei;
    ei.push_back(Path::of_edges(B->g, {G::pos(0)}));
    ei.push_back(Path::of_edges(B->g, {G::pos(0)}));
    ei.push_back(Path::of_edges(B->g, {G::pos(1)}));
    return GraphMap(A, B, {bp, bp}, std::move(ei), {});
}

// rose2(1,1) self-map a -> a b a^-1, b -> b: the two ends of the first petal
// share an image direction, so the petal folds onto itself.
GraphMap rose_conjugating_map() {
    auto A = fx::share(fx::rose2(Rat(1), Rat(1)));
    auto B = fx::share(fx::rose2(Rat(1), Rat(1)));
    GraphPoint bp = GraphPoint::at_vertex(B->basepoint);
    std::vector<Path> ei;
    ei.push_back(Path::of_edges(B->g, {G::pos(0), G::pos(1), G::neg(0)}));
    ei.push_back(Path::of_edges(B->g, {G::pos(1)}));
    return GraphMap(A, B, {bp}, std::move(ei), {});
}

bool lengths_match(const MarkedGraph& X, const MarkedGraph& Y,
                   const std::vector<std::string>& words) {
    for (const auto& s : words) {
        Word w = fx::W(*X.ctx, s);
        if (!(translation_length(X, w) == translation_length(Y, w))) return false;
    }
    return true;
}

// The defining property of a directed geodesic: between any two ordered
// sample points the right stretch factor is realized by the witness class.
void check_geodesic_identity(const Geodesic& geo,
                             const std::vector<std::pair<int, Rat>>& params) {
    std::vector<MarkedGraph> pts;
    for (const auto& [leg, u] : params) pts.push_back(geodesic_point(geo, leg, u));
    for (size_t i = 0; i < pts.size(); ++i) {
        for (size_t j = i + 1; j < pts.size(); ++j) {
            Rat lam = stretch_right(pts[i], pts[j]).factor;
            CHECK(lam * translation_length(pts[i], geo.witness) ==
                  translation_length(pts[j], geo.witness));
        }
    }
}

}  // namespace

TEST_CASE("subdividing an edge keeps the marked point") {
    auto X = fx::rose2(Rat(1), Rat(1));
    MarkedGraph Y = subdivide_edge(X, 0, Rat(1, 3));
    ValidateOptions vo;
    vo.require_minimal = false;
    CHECK(validate(Y, vo).empty());
    CHECK(Y.g.num_vertices() == 2);
    CHECK(Y.g.num_edges() == 3);
    CHECK(covolume(Y) == covolume(X));
    CHECK(lengths_match(X, Y, {"a", "b", "a b", "a b^-1", "a a b"}));

    // subdividing the fresh tail again still preserves every length
    MarkedGraph Z = subdivide_edge(Y, 2, Rat(1, 5));
    CHECK(validate(Z, vo).empty());
    CHECK(covolume(Z) == Rat(2));
    CHECK(lengths_match(X, Z, {"a", "b", "a b", "a b^-1", "a a b"}));

    CHECK_THROWS_AS((void)subdivide_edge(X, 5, Rat(1, 2)), domain_error);
    CHECK_THROWS_AS((void)subdivide_edge(X, 0, Rat(0)), domain_error);
    CHECK_THROWS_AS((void)subdivide_edge(X, 0, Rat(1)), domain_error);
}

TEST_CASE("subdividing next to a labeled vertex moves the basepoint to the new free vertex") {
    auto X = fx::labeled_loop(Rat(1));
    REQUIRE(X.g.vertex(X.basepoint).label == 1);
    MarkedGraph Y = subdivide_edge(X, 0, Rat(1, 2));
    ValidateOptions vo;
    vo.require_minimal = false;
    CHECK(validate(Y, vo).empty());
    CHECK(Y.basepoint == 1);
    CHECK(Y.g.vertex(Y.basepoint).label == 0);
    CHECK(lengths_match(X, Y, {"a", "v1:1 a", "v1:1 a v1:1 a^-1 a"}));
}

TEST_CASE("collapsing an empty forest merges the redundant vertices back") {
    auto X = fx::rose2(Rat(1), Rat(1));
    MarkedGraph Y = subdivide_edge(X, 0, Rat(1, 3));
    MarkedGraph Z = collapse_edges(Y, {});
    CHECK(validate(Z).empty());
    CHECK(Z.g.num_vertices() == 1);
    CHECK(Z.g.num_edges() == 2);
    CHECK(covolume(Z) == Rat(2));
    CHECK(equal_candidate_lengths(Z, X));
}

TEST_CASE("collapsing a tree edge of the theta graph gives the rose") {
    auto T = fx::theta(Rat(1), Rat(1), Rat(1));
    MarkedGraph C = collapse_edges(T, {0});
    CHECK(validate(C).empty());
    CHECK(C.g.num_vertices() == 1);
    CHECK(C.g.num_edges() == 2);
    CHECK(covolume(C) == Rat(2));
    CHECK(equal_candidate_lengths(C, fx::rose2(Rat(1), Rat(1))));

    CHECK_THROWS_AS((void)collapse_edges(T, {1, 2}), domain_error);  // e1 + e2 close a cycle
    auto R = fx::rose2(Rat(1), Rat(1));
    CHECK_THROWS_AS((void)collapse_edges(R, {0}), domain_error);  // a loop is a cycle
    auto D = fx::dumbbell_edge(Rat(1));
    CHECK_THROWS_AS((void)collapse_edges(D, {0}), domain_error);  // two labeled ends
}

TEST_CASE("collapsing a spoke lands on the labeled vertex") {
    auto X = fx::star_rose(Rat(1), Rat(1), Rat(1));
    auto ctx = fx::Z2_Z2_Z();
    MarkedGraph C = collapse_edges(X, {0});
    CHECK(validate(C).empty());
    CHECK(covolume(C) == Rat(2));
    // the hub is absorbed into the Z/2 vertex: its letter now costs nothing
    CHECK(translation_length(C, fx::W(ctx, "v1:1 a")) == Rat(1));
    CHECK(translation_length(C, fx::W(ctx, "v2:1 a")) == Rat(3));
    CHECK(translation_length(C, fx::W(ctx, "a")) == Rat(1));
    // no free vertex is left, so the basepoint falls back to the G1 vertex
    CHECK(C.g.vertex(C.basepoint).label == 1);
}

TEST_CASE("foldable turns are the equal-image-direction germ pairs") {
    GraphMap f = theta_onto_rose();
    auto ts = foldable_turns(f);
    REQUIRE(ts.size() == 2);
    CHECK(ts[0].a.oedge == G::pos(0));
    CHECK(ts[0].b.oedge == G::pos(1));
    CHECK(ts[0].a.pre == 0);
    CHECK(ts[1].a.oedge == G::neg(0));
    CHECK(ts[1].b.oedge == G::neg(1));

    // deterministic: a second scan reports the same turns
    auto again = foldable_turns(f);
    REQUIRE(again.size() == ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        CHECK(again[i].a.oedge == ts[i].a.oedge);
        CHECK(again[i].b.oedge == ts[i].b.oedge);
    }
    CHECK(turn_str(f.A().g, ts[0]).find("e0") != std::string::npos);
    CHECK(turn_str(f.A().g, ts[0]).find("e1") != std::string::npos);
}

TEST_CASE("turn validation rejects malformed and non-foldable turns") {
    GraphMap f = theta_onto_rose();
    // same germ twice
    CHECK_THROWS_AS((void)max_fold_amount(f, Turn{{0, G::pos(0)}, {0, G::pos(0)}}),
                    domain_error);
    // germs based at different vertices
    CHECK_THROWS_AS((void)max_fold_amount(f, Turn{{0, G::pos(0)}, {0, G::neg(0)}}),
                    domain_error);
    // legal turn (image directions differ): nothing to fold
    CHECK_THROWS_AS((void)max_fold_amount(f, Turn{{0, G::pos(0)}, {0, G::pos(2)}}),
                    domain_error);
    CHECK_THROWS_AS((void)max_fold_amount(f, Turn{{0, G::pos(17)}, {0, G::pos(0)}}),
                    domain_error);
}

TEST_CASE("partial fold of two parallel edges") {
    GraphMap f = theta_onto_rose();
    const MarkedGraph& A = f.A();
    Turn t{{0, G::pos(0)}, {0, G::pos(1)}};

    // both edges wrap the same petal entirely: the complete fold would kill a loop
    CHECK_THROWS_AS((void)max_fold_amount(f, t), domain_error);
    CHECK_THROWS_AS((void)fold(f, t, Rat(1)), domain_error);
    CHECK_THROWS_AS((void)fold(f, t, Rat(9, 8)), domain_error);
    CHECK_THROWS_AS((void)fold(f, t, Rat(-1, 4)), domain_error);

    // amount zero: same point, identity quotient, untouched remainder
    FoldResult r0 = fold(f, t, Rat(0));
    CHECK(equal_candidate_lengths(*r0.folded, A));
    CHECK(r0.move.amount == Rat(0));
    CHECK(r0.quotient.lip() == Rat(1));
    CHECK(r0.remainder.lip() == f.lip());

    // a genuine partial fold: identify the first quarter of e0 and e1
    FoldResult r = fold(f, t, Rat(1, 4));
    const MarkedGraph& Q = *r.folded;
    CHECK(validate(Q).empty());
    CHECK(covolume(Q) == Rat(11, 4));
    CHECK(Q.g.num_vertices() == 2);
    CHECK(Q.g.num_edges() == 3);
    auto ctx = fx::F2();
    CHECK(translation_length(Q, fx::W(ctx, "a")) == Rat(3, 2));
    CHECK(translation_length(Q, fx::W(ctx, "b")) == Rat(2));
    CHECK(translation_length(Q, fx::W(ctx, "a b^-1")) == Rat(2));
    CHECK(translation_length(Q, fx::W(ctx, "a b")) == Rat(7, 2));
    CHECK(r.quotient.lip() == Rat(1));
    CHECK(r.remainder.lip() == Rat(1));
    CHECK(r.move.amount == Rat(1, 4));
    CHECK_FALSE(r.move.full_a);
    CHECK_FALSE(r.move.full_b);

    // folding from the other endpoint is symmetric
    Turn s{{0, G::neg(0)}, {0, G::neg(1)}};
    FoldResult rv = fold(f, s, Rat(1, 4));
    CHECK(covolume(*rv.folded) == Rat(11, 4));
    CHECK(translation_length(*rv.folded, fx::W(ctx, "a")) == Rat(3, 2));
}

TEST_CASE("folding a petal onto itself leaves a lollipop") {
    GraphMap f = rose_conjugating_map();
    auto ts = foldable_turns(f);
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].a.oedge == G::pos(0));
    CHECK(ts[0].b.oedge == G::neg(0));

    CHECK(max_fold_amount(f, ts[0]) == Rat(1, 3));
    FoldResult r = complete_simple_fold(f, ts[0]);
    const MarkedGraph& Q = *r.folded;
    CHECK(validate(Q).empty());
    CHECK(covolume(Q) == Rat(5, 3));
    CHECK(Q.g.num_vertices() == 2);
    CHECK(Q.g.num_edges() == 3);
    auto ctx = fx::F2();
    // the first petal now travels down the stem, around the small circle, and
    // back: its class is carried to a conjugate of the short circle
    CHECK(translation_length(Q, fx::W(ctx, "a")) == Rat(1, 3));
    CHECK(translation_length(Q, fx::W(ctx, "b")) == Rat(1));
    CHECK(translation_length(Q, fx::W(ctx, "a b")) == Rat(2));
    CHECK(translation_length(Q, fx::W(ctx, "a b^-1")) == Rat(2));
    CHECK(r.move.amount == Rat(1, 3));
    CHECK(r.quotient.lip() == Rat(1));
    CHECK(r.remainder.lip() == Rat(3));
}

TEST_CASE("a pure rescaling geodesic") {
    auto A = fx::rose2(Rat(1, 2), Rat(1, 2));
    auto B = fx::rose2(Rat(1, 3), Rat(2, 3));
    Geodesic geo = geodesic(A, B);
    CHECK(stretch_right(A, B).factor == Rat(4, 3));
    CHECK(translation_length(B, geo.witness) ==
          Rat(4, 3) * translation_length(A, geo.witness));
    REQUIRE(geo.speeds.size() == 2);
    CHECK(geo.speeds[0] == Rat(2, 3));
    CHECK(geo.speeds[1] == Rat(4, 3));
    CHECK(geo.leg.moves.empty());
    CHECK(equal_candidate_lengths(*geo.A0, B));

    MarkedGraph mid = geodesic_point(geo, 0, Rat(1, 2));
    CHECK(mid.g.edge(0).len == Rat(5, 12));
    CHECK(mid.g.edge(1).len == Rat(7, 12));
    CHECK(equal_candidate_lengths(geodesic_point(geo, 0, Rat(0)), A));
    CHECK(equal_candidate_lengths(geodesic_point(geo, 0, Rat(1)), B));
    check_geodesic_identity(geo, {{0, Rat(0)}, {0, Rat(1, 4)}, {0, Rat(1, 2)}, {0, Rat(1)}});
}

TEST_CASE("a geodesic that collapses a dying tree edge") {
    auto A = fx::theta(Rat(1), Rat(1), Rat(1));
    auto B = fx::rose2(Rat(1), Rat(1));
    Geodesic geo = geodesic(A, B);
    CHECK(stretch_right(A, B).factor == Rat(1));
    REQUIRE(geo.speeds.size() == 3);
    CHECK(geo.speeds[0] == Rat(0));
    CHECK(geo.speeds[1] == Rat(1));
    CHECK(geo.speeds[2] == Rat(1));
    CHECK(geo.leg.moves.empty());
    CHECK(equal_candidate_lengths(*geo.A0, B));

    // halfway the dying edge has half its length and everything is still valid
    MarkedGraph mid = geodesic_point(geo, 0, Rat(1, 2));
    CHECK(validate(mid).empty());
    CHECK(covolume(mid) == Rat(5, 2));
    check_geodesic_identity(geo, {{0, Rat(0)}, {0, Rat(1, 2)}, {0, Rat(3, 4)}, {0, Rat(1)}});

    // but the collapse point itself cannot be produced by interpolation shy of u == 1
    CHECK(equal_candidate_lengths(geodesic_point(geo, 0, Rat(1)), B));
}

TEST_CASE("a folding geodesic to a twisted marking") {
    auto A = fx::rose2(Rat(1), Rat(1));
    MarkedGraph B = twisted(fx::rose2(Rat(1), Rat(1)), f2_golden(), f2_golden_inv());
    Geodesic geo = geodesic(A, B);
    CHECK(stretch_right(A, B).factor == Rat(2));
    REQUIRE(geo.speeds.size() == 2);
    CHECK(geo.speeds[0] == Rat(1));
    CHECK(geo.speeds[1] == Rat(2));
    CHECK(covolume(*geo.A0) == Rat(3));
    REQUIRE(geo.leg.moves.size() == 1);
    CHECK(geo.leg.moves[0].amount == Rat(1));
    CHECK(equal_candidate_lengths(*geo.leg.points.back(), B));

    // lengths only ever shrink towards the codomain along the folding leg
    auto ctx = fx::F2();
    for (const char* s : {"a", "b", "a b", "a b^-1", "a a b^-1"}) {
        Word w = fx::W(ctx, s);
        Rat prev = translation_length(*geo.leg.points[0], w);
        for (size_t j = 1; j < geo.leg.points.size(); ++j) {
            Rat cur = translation_length(*geo.leg.points[j], w);
            CHECK(cur <= prev);
            prev = cur;
        }
        CHECK(translation_length(B, w) <= prev);
    }

    check_geodesic_identity(geo, {{0, Rat(0)},
                                  {0, Rat(1, 3)},
                                  {0, Rat(1)},
                                  {1, Rat(1, 4)},
                                  {1, Rat(1, 2)},
                                  {1, Rat(1)}});

    CHECK_THROWS_AS((void)geodesic_point(geo, 2, Rat(1, 2)), domain_error);
    CHECK_THROWS_AS((void)geodesic_point(geo, 0, Rat(3, 2)), domain_error);
}

TEST_CASE("a folding geodesic with labeled vertices and twisted germs") {
    auto ctx = fx::Z2_Z2_Z();
    Automorphism phi(ctx, {fx::W(ctx, "v1:1 v2:1 a")},
                     {FactorAction{Word::identity(), identity_token_map(*ctx, 1)},
                      FactorAction{Word::identity(), identity_token_map(*ctx, 2)}});
    Automorphism psi(ctx, {fx::W(ctx, "v2:1 v1:1 a")},
                     {FactorAction{Word::identity(), identity_token_map(*ctx, 1)},
                      FactorAction{Word::identity(), identity_token_map(*ctx, 2)}});
    auto A = fx::star_rose(Rat(1), Rat(1), Rat(1));
    MarkedGraph B = twisted(A, phi, psi);

    Geodesic geo = geodesic(A, B);
    CHECK(stretch_right(A, B).factor == Rat(5));
    CHECK(translation_length(B, geo.witness) == Rat(5) * translation_length(A, geo.witness));
    CHECK(!geo.leg.moves.empty());
    CHECK(equal_candidate_lengths(*geo.leg.points.back(), B));

    std::vector<std::pair<int, Rat>> params = {{0, Rat(0)}, {0, Rat(1, 2)}, {0, Rat(1)}};
    params.emplace_back(1, Rat(1, 2));
    params.emplace_back((int)geo.leg.moves.size(), Rat(1));
    check_geodesic_identity(geo, params);
}
