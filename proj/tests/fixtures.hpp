// Shared test fixtures: small signatures and hand-built marked graphs.
#pragma once

#include <memory>

#include "fpo/graph.hpp"
#include "fpo/group.hpp"
#include "fpo/word.hpp"

namespace fx {

using namespace fpo;

inline std::shared_ptr<const FreeProduct> F2() {
    static auto ctx = std::make_shared<const FreeProduct>(
        std::vector<std::shared_ptr<const GroupOracle>>{}, 2);
    return ctx;
}

inline std::shared_ptr<const FreeProduct> Z2_Z() {
    static auto ctx = std::make_shared<const FreeProduct>(
        std::vector<std::shared_ptr<const GroupOracle>>{
            FiniteTableGroup::cyclic(2)},
        1);
    return ctx;
}

inline std::shared_ptr<const FreeProduct> Z2_Z2() {
    static auto ctx = std::make_shared<const FreeProduct>(
        std::vector<std::shared_ptr<const GroupOracle>>{
            FiniteTableGroup::cyclic(2),
            FiniteTableGroup::cyclic(2)},
        0);
    return ctx;
}

inline std::shared_ptr<const FreeProduct> Z2_Z2_Z() {
    static auto ctx = std::make_shared<const FreeProduct>(
        std::vector<std::shared_ptr<const GroupOracle>>{
            FiniteTableGroup::cyclic(2),
            FiniteTableGroup::cyclic(2)},
        1);
    return ctx;
}

inline std::shared_ptr<const FreeProduct> Z3_Z2() {
    static auto ctx = std::make_shared<const FreeProduct>(
        std::vector<std::shared_ptr<const GroupOracle>>{
            FiniteTableGroup::cyclic(3),
            FiniteTableGroup::cyclic(2)},
        0);
    return ctx;
}

// Rank-2 rose with petal lengths la, lb.
inline MarkedGraph rose2(const Rat& la, const Rat& lb) {
    MarkedGraph X = base_marked_graph(F2());
    X.set_edge_length(0, la);
    X.set_edge_length(1, lb);
    return X;
}

// Theta graph: two free vertices joined by three parallel edges; generator
// loops a = e1 then back along e0, b = e2 then back along e0.
inline MarkedGraph theta(const Rat& l0, const Rat& l1, const Rat& l2) {
    MarkedGraph X(F2());
    MetricGraphOfGroups& g = X.g;
    int u = g.add_vertex("u", 0);
    int v = g.add_vertex("v", 0);
    int e0 = g.add_edge("e0", u, v, l0);
    int e1 = g.add_edge("e1", u, v, l1);
    int e2 = g.add_edge("e2", u, v, l2);
    X.basepoint = u;
    X.tree_edges = {e0};
    X.edge_words = {Word::identity(), Word::free_gen(0), Word::free_gen(1)};
    X.gen_loops.push_back(
        Path::of_edges(g, {MetricGraphOfGroups::pos(e1), MetricGraphOfGroups::neg(e0)}));
    X.gen_loops.push_back(
        Path::of_edges(g, {MetricGraphOfGroups::pos(e2), MetricGraphOfGroups::neg(e0)}));
    return X;
}

// Z/2 * Z rose: free hub with spoke (length t) to the Z/2 vertex and a free
// loop (length l).
inline MarkedGraph lollipop(const Rat& t, const Rat& l) {
    MarkedGraph X = base_marked_graph(Z2_Z());
    X.set_edge_length(0, t);
    X.set_edge_length(1, l);
    return X;
}

// Z/2 * Z point with no free vertex: a single loop (length l) attached to
// the labeled vertex itself.
inline MarkedGraph labeled_loop(const Rat& l) {
    MarkedGraph X(Z2_Z());
    MetricGraphOfGroups& g = X.g;
    int v = g.add_vertex("v1", 1);
    int e = g.add_edge("a", v, v, l);
    X.basepoint = v;
    X.tree_edges = {};
    X.edge_words = {Word::free_gen(0)};
    X.gen_loops.push_back(Path::of_edges(g, {MetricGraphOfGroups::pos(e)}));
    X.factor_paths.push_back(Path::at_vertex(v));
    X.factor_words.push_back(Word::identity());
    return X;
}

// Z/2 * Z/2: the single edge joining the two labeled vertices.
inline MarkedGraph dumbbell_edge(const Rat& len) {
    MarkedGraph X = base_marked_graph(Z2_Z2());
    X.set_edge_length(0, len);
    return X;
}

// Z/2 * Z/2 * Z base rose with spoke lengths t1, t2 and loop length l.
inline MarkedGraph star_rose(const Rat& t1, const Rat& t2, const Rat& l) {
    MarkedGraph X = base_marked_graph(Z2_Z2_Z());
    X.set_edge_length(0, t1);
    X.set_edge_length(1, t2);
    X.set_edge_length(2, l);
    return X;
}

inline Word W(const FreeProduct& ctx, const std::string& s) { return parse_word(ctx, s); }
inline Word W(const std::shared_ptr<const FreeProduct>& ctx, const std::string& s) {
    return parse_word(*ctx, s);
}

inline std::shared_ptr<const MarkedGraph> share(MarkedGraph x) {
    return std::make_shared<MarkedGraph>(std::move(x));
}

}  // namespace fx
