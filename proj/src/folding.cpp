#include "fpo/folding.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <utility>
#include <variant>

#include "fpo/metric.hpp"

namespace fpo {

namespace {

using GG = MetricGraphOfGroups;

[[noreturn]] void internal_error(const std::string& what) {
    throw domain_error("fold bookkeeping invariant failed: " + what);
}

std::vector<TokenMap> identity_letter_maps(const FreeProduct& ctx) {
    std::vector<TokenMap> lms;
    lms.reserve((size_t)ctx.p());
    for (int gid = 1; gid <= ctx.p(); ++gid) lms.push_back(identity_token_map(ctx, gid));
    return lms;
}

int oriented_remap(int o, const std::vector<int>& emap) {
    int e = emap.at((size_t)GG::edge_of(o));
    if (e < 0) internal_error("segment through a deleted edge");
    return GG::is_rev(o) ? GG::neg(e) : GG::pos(e);
}

std::string unique_edge_name(const GG& g, std::string base) {
    while (g.find_edge(base) >= 0) base += "'";
    return base;
}

// Per vertex, the oriented edge by which breadth-first search from `root`
// first reaches it (-1 at the root). Deterministic; throws if disconnected.
std::vector<int> bfs_tree_dirs(const GG& g, int root) {
    std::vector<int> dir((size_t)g.num_vertices(), -2);
    dir[(size_t)root] = -1;
    std::deque<int> queue{root};
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int o : g.star(v)) {
            int u = g.to(o);
            if (dir[(size_t)u] != -2) continue;
            dir[(size_t)u] = o;
            queue.push_back(u);
        }
    }
    for (int v = 0; v < g.num_vertices(); ++v)
        if (dir[(size_t)v] == -2) internal_error("graph became disconnected");
    return dir;
}

// Lift a letter-free full-edge path of `gy` back to `gx` through an edge
// correspondence einv (gy edge id -> gx edge id, orientation preserved).
// Where consecutive lifted pieces land at different gx vertices with the
// same image, `connector(from, to)` supplies a gx path that maps to a null
// path; a final connector makes the lift end at end_x.
Path unfold(const GG& gx, const GG& gy, const Path& py, int start_x, int end_x,
            const std::vector<int>& einv,
            const std::function<Path(int, int)>& connector) {
    Path out = Path::at_vertex(start_x);
    int cur = start_x;
    for (const PathAtom& at : py.atoms()) {
        if (std::holds_alternative<PathLetter>(at)) internal_error("unfold met a letter");
        const Seg& s = std::get<Seg>(at);
        int ey = GG::edge_of(s.oedge);
        if (!(s.a.is_zero() && s.b == gy.edge(ey).len)) internal_error("unfold met a partial edge");
        int ex = einv.at((size_t)ey);
        if (ex < 0) internal_error("unfold met an edge with no preimage");
        int ox = GG::is_rev(s.oedge) ? GG::neg(ex) : GG::pos(ex);
        int from_x = gx.from(ox);
        if (from_x != cur) out.push_path(gx, connector(cur, from_x));
        out.push_oedge(gx, ox);
        cur = gx.to(ox);
    }
    if (cur != end_x) out.push_path(gx, connector(cur, end_x));
    return out;
}

// Recompute the spanning tree and inverse-marking words of `next` from those
// of `x` after an identification. einv maps next edges to x edges; connector
// joins x vertices with a common image (its image must tighten to nothing).
void reread_words(const MarkedGraph& x, MarkedGraph& next, const std::vector<int>& einv,
                  const std::function<Path(int, int)>& connector) {
    const GG& gx = x.g;
    const GG& gy = next.g;
    std::vector<int> dir = bfs_tree_dirs(gy, next.basepoint);
    std::vector<int> tree;
    for (int v = 0; v < gy.num_vertices(); ++v)
        if (dir[(size_t)v] >= 0) tree.push_back(GG::edge_of(dir[(size_t)v]));
    std::sort(tree.begin(), tree.end());
    next.tree_edges = tree;
    next.edge_words.assign((size_t)gy.num_edges(), Word::identity());
    const int bx = x.basepoint;
    for (int e = 0; e < gy.num_edges(); ++e) {
        if (std::binary_search(tree.begin(), tree.end(), e)) continue;
        Path loop = concat(gy, next.tree_path(gy.edge(e).from), Path::of_edges(gy, {GG::pos(e)}));
        loop = concat(gy, loop, next.tree_path(gy.edge(e).to).reversed(gy)).tightened(gy);
        Path lift = unfold(gx, gy, loop, bx, bx, einv, connector).tightened(gx);
        next.edge_words[(size_t)e] = read_loop_word(x, lift);
    }
    next.factor_words.assign((size_t)x.ctx->p(), Word::identity());
    for (int gid = 1; gid <= x.ctx->p(); ++gid) {
        int vy = gy.labeled_vertex(gid);
        int vx = gx.labeled_vertex(gid);
        if (vy < 0 || vx < 0) internal_error("a labeled vertex disappeared");
        Path lift = unfold(gx, gy, next.tree_path(vy), bx, vx, einv, connector).tightened(gx);
        next.factor_words[(size_t)(gid - 1)] = path_factor_word(x, gid, lift);
    }
}

// ---------------------------------------------------------------------------
// Surgery state. Tracks a chain of elementary moves away from a fixed base
// point, keeping enough exact data to rebuild both the quotient map
// base -> cur and (when a directing map f: base -> Z is present) the induced
// map cur -> Z:
//   support[e]  a base path of the same length as cur edge e, mapping onto it
//   vhome[v]    a base point mapping onto cur vertex v
//   vimg, eimg  images of base vertices/edges in cur (the quotient data)
// ---------------------------------------------------------------------------

struct Work {
    std::shared_ptr<const MarkedGraph> base;
    const GraphMap* f = nullptr;
    std::shared_ptr<const MarkedGraph> cur;
    std::vector<Path> support;
    std::vector<GraphPoint> vhome;
    std::vector<GraphPoint> vimg;
    std::vector<Path> eimg;
    // Path in cur from cur->basepoint to vimg[base->basepoint]. Rebasing and
    // merging can move the two apart; the marking of cur then equals the
    // transported marking of base conjugated along this anchor.
    Path anchor;
};

Work make_work(std::shared_ptr<const MarkedGraph> base, const GraphMap* f) {
    Work w;
    w.base = std::move(base);
    w.f = f;
    w.cur = w.base;
    const GG& g = w.base->g;
    for (int e = 0; e < g.num_edges(); ++e) {
        w.support.push_back(Path::of_edges(g, {GG::pos(e)}));
        w.eimg.push_back(Path::of_edges(g, {GG::pos(e)}));
    }
    for (int v = 0; v < g.num_vertices(); ++v) {
        w.vhome.push_back(GraphPoint::at_vertex(v));
        w.vimg.push_back(GraphPoint::at_vertex(v));
    }
    w.anchor = Path::at_vertex(w.base->basepoint);
    return w;
}

void apply_rw(Work& w, const PathRewriter& rw, std::shared_ptr<const MarkedGraph> next) {
    for (Path& p : w.eimg) p = rw.apply(p);
    for (GraphPoint& p : w.vimg) p = rw.map_point(p);
    w.anchor = rw.apply(w.anchor);
    w.cur = std::move(next);
}

void w_rebase(Work& w, int v) {
    if (w.cur->basepoint == v) return;
    // rebased() conjugates the marking along the tree path old -> new; the
    // anchor picks up the same connector so the two stay in step.
    Path pi = w.cur->tree_path(v);
    w.anchor = concat(w.cur->g, pi.reversed(w.cur->g), w.anchor).tightened(w.cur->g);
    w.cur = std::make_shared<const MarkedGraph>(rebased(*w.cur, v));
}

// Insert a free vertex on edge e at parameter t of its own frame (0 < t < L).
// The [0, t] piece keeps the id of e; returns the id of the new tail.
int w_subdivide(Work& w, int e, const Rat& t) {
    const MarkedGraph& X = *w.cur;
    const GG& g = X.g;
    const Rat L = g.edge(e).len;
    if (!(t.sign() > 0 && t < L)) throw domain_error("subdivision parameter out of range");

    auto nx = std::make_shared<MarkedGraph>(X.ctx);
    GG& ng = nx->g;
    for (int v = 0; v < g.num_vertices(); ++v) ng.add_vertex(g.vertex(v).name, g.vertex(v).label);
    const int u = ng.add_vertex(0);
    for (int i = 0; i < g.num_edges(); ++i) {
        const auto& ed = g.edge(i);
        if (i == e)
            ng.add_edge(ed.name, ed.from, u, t);
        else
            ng.add_edge(ed.name, ed.from, ed.to, ed.len);
    }
    const int hi = ng.add_edge(unique_edge_name(ng, g.edge(e).name + "'"), u, g.edge(e).to, L - t);
    nx->basepoint = X.basepoint;
    nx->tree_edges = X.tree_edges;
    nx->edge_words = X.edge_words;
    nx->edge_words.push_back(Word::identity());
    if (X.is_tree_edge(e)) {
        nx->tree_edges.push_back(hi);
    } else {
        // the [0, t] piece joins the tree to reach u; the tail keeps the word
        nx->tree_edges.push_back(e);
        nx->edge_words[(size_t)hi] = nx->edge_words[(size_t)e];
        nx->edge_words[(size_t)e] = Word::identity();
    }
    std::sort(nx->tree_edges.begin(), nx->tree_edges.end());
    nx->factor_words = X.factor_words;

    PathRewriter rw;
    rw.src = &g;
    rw.dst = &ng;
    rw.map_point = [&ng, e, t, hi, u](const GraphPoint& x) -> GraphPoint {
        if (x.is_vertex()) return GraphPoint::at_vertex(x.vertex);
        if (x.edge != e) return x;
        if (x.offset == t) return GraphPoint::at_vertex(u);
        if (x.offset < t) return point_at(ng, GG::pos(e), x.offset);
        return point_at(ng, GG::pos(hi), x.offset - t);
    };
    const Rat c = L - t;  // the cut position seen from the reversed frame
    rw.map_seg = [e, t, c, hi](int o, const Rat& a, const Rat& b, Path& out) {
        if (GG::edge_of(o) != e) {
            out.push_seg(Seg{o, a, b});
            return;
        }
        if (!GG::is_rev(o)) {
            if (a < t) out.push_seg(Seg{GG::pos(e), a, std::min(b, t)});
            if (b > t) out.push_seg(Seg{GG::pos(hi), std::max(a, t) - t, b - t});
        } else {
            if (a < c) out.push_seg(Seg{GG::neg(hi), a, std::min(b, c)});
            if (b > c) out.push_seg(Seg{GG::neg(e), std::max(a, c) - c, b - c});
        }
    };
    rw.map_letter = [](int, int, Token tok, int) { return tok; };
    for (const Path& p : X.gen_loops) nx->gen_loops.push_back(rw.apply(p));
    for (const Path& p : X.factor_paths) nx->factor_paths.push_back(rw.apply(p));

    const Path sup = w.support[(size_t)e];
    w.support[(size_t)e] = subpath(w.base->g, sup, Rat(0), t);
    w.support.push_back(subpath(w.base->g, sup, t, L));
    w.vhome.push_back(point_along(w.base->g, sup, t));
    apply_rw(w, rw, nx);
    return hi;
}

// Identify the two (whole, equal-length, distinct) germ edges of a turn at
// their common vertex, absorbing the far endpoint of side b into side a's.
// At a labeled vertex the identification is twisted by inv(pre_a) * pre_b.
void w_full_fold(Work& w, Germ ga, Germ gb) {
    {
        const GG& g0 = w.cur->g;
        if (g0.from(ga.oedge) != g0.from(gb.oedge))
            internal_error("full fold germs at different vertices");
        if (GG::edge_of(ga.oedge) == GG::edge_of(gb.oedge))
            internal_error("full fold within a single edge");
        if (!(g0.edge(GG::edge_of(ga.oedge)).len == g0.edge(GG::edge_of(gb.oedge)).len))
            internal_error("full fold of unequal lengths");
        int wa0 = g0.to(ga.oedge), wb0 = g0.to(gb.oedge);
        if (wa0 == wb0) throw domain_error("fold would collapse an essential loop");
        if (g0.vertex(wa0).label > 0 && g0.vertex(wb0).label > 0)
            throw domain_error("fold would merge two labeled vertices");
        if (g0.vertex(wb0).label > 0) std::swap(ga, gb);  // the labeled far end survives
    }
    const MarkedGraph& X = *w.cur;
    const GG& g = X.g;
    const FreeProduct& ctx = *X.ctx;
    const int oa = ga.oedge, ob = gb.oedge;
    const int v = g.from(oa);
    const int wa = g.to(oa), wb = g.to(ob);
    const int e_a = GG::edge_of(oa), e_b = GG::edge_of(ob);
    const Rat L = g.edge(e_a).len;
    const int label_v = g.vertex(v).label;
    const int label_wa = g.vertex(wa).label;
    Token tw = 0;
    if (label_v > 0) {
        const GroupOracle& gi = ctx.factor(label_v);
        tw = gi.multiply(gi.invert(ga.pre), gb.pre);
    } else if (ga.pre != 0 || gb.pre != 0) {
        internal_error("letter-decorated germs at a free vertex");
    }
    if (w.f && !(map_point(*w.f, w.vhome[(size_t)wa]) == map_point(*w.f, w.vhome[(size_t)wb])))
        internal_error("directed fold with disagreeing far images");

    auto nx = std::make_shared<MarkedGraph>(X.ctx);
    GG& ng = nx->g;
    std::vector<int> vmap((size_t)g.num_vertices(), -1);
    for (int x = 0; x < g.num_vertices(); ++x) {
        if (x == wb) continue;
        vmap[(size_t)x] = ng.add_vertex(g.vertex(x).name, g.vertex(x).label);
    }
    vmap[(size_t)wb] = vmap[(size_t)wa];
    std::vector<int> emap((size_t)g.num_edges(), -1);
    for (int i = 0; i < g.num_edges(); ++i) {
        if (i == e_b) continue;
        const auto& ed = g.edge(i);
        emap[(size_t)i] = ng.add_edge(ed.name, vmap[(size_t)ed.from], vmap[(size_t)ed.to], ed.len);
    }
    nx->basepoint = vmap[(size_t)X.basepoint];

    PathRewriter rw;
    rw.src = &g;
    rw.dst = &ng;
    const int na = oriented_remap(oa, emap);
    rw.map_point = [&ng, vmap, emap, e_a, e_b, oa, ob, L](const GraphPoint& x) -> GraphPoint {
        if (x.is_vertex()) return GraphPoint::at_vertex(vmap[(size_t)x.vertex]);
        if (x.edge != e_b) return point_at(ng, GG::pos(emap[(size_t)x.edge]), x.offset);
        const Rat d = (ob == GG::pos(e_b)) ? x.offset : L - x.offset;  // distance from v
        const Rat noff = (oa == GG::pos(e_a)) ? d : L - d;
        return point_at(ng, GG::pos(emap[(size_t)e_a]), noff);
    };
    rw.map_seg = [emap, e_b, ob, na](int o, const Rat& a, const Rat& b, Path& out) {
        int target;
        if (GG::edge_of(o) == e_b)
            target = (o == ob) ? na : GG::rev(na);
        else
            target = oriented_remap(o, emap);
        out.push_seg(Seg{target, a, b});
    };
    rw.map_letter = [&ctx, v, ob, label_v, tw, wb, label_wa](int x, int arrive, Token tok,
                                                             int leave) -> Token {
        if (x == v && label_v > 0) {
            const GroupOracle& gi = ctx.factor(label_v);
            Token acc = tok;
            if (arrive == ob) acc = gi.multiply(tw, acc);
            if (leave == ob) acc = gi.multiply(acc, gi.invert(tw));
            return acc;
        }
        if (x == wb && label_wa > 0) return ctx.factor(label_wa).identity();
        return tok;
    };
    for (const Path& p : X.gen_loops) nx->gen_loops.push_back(rw.apply(p));
    for (const Path& p : X.factor_paths) nx->factor_paths.push_back(rw.apply(p));

    std::vector<int> einv((size_t)ng.num_edges(), -1);
    for (int i = 0; i < g.num_edges(); ++i)
        if (emap[(size_t)i] >= 0) einv[(size_t)emap[(size_t)i]] = i;
    auto connector = [&g, &ctx, oa, ob, wa, wb, label_v, tw](int from, int to) -> Path {
        if (from == wa && to == wb) {
            Path c = Path::at_vertex(wa);
            c.push_oedge(g, GG::rev(oa));
            if (label_v > 0) c.push_letter(g, label_v, tw);
            c.push_oedge(g, ob);
            return c;
        }
        if (from == wb && to == wa) {
            Path c = Path::at_vertex(wb);
            c.push_oedge(g, GG::rev(ob));
            if (label_v > 0) c.push_letter(g, label_v, ctx.factor(label_v).invert(tw));
            c.push_oedge(g, oa);
            return c;
        }
        internal_error("connector requested between unidentified vertices");
    };
    reread_words(X, *nx, einv, connector);

    std::vector<Path> nsup((size_t)ng.num_edges());
    for (int i = 0; i < g.num_edges(); ++i)
        if (emap[(size_t)i] >= 0) nsup[(size_t)emap[(size_t)i]] = w.support[(size_t)i];
    std::vector<GraphPoint> nvh((size_t)ng.num_vertices());
    for (int x = 0; x < g.num_vertices(); ++x)
        if (x != wb) nvh[(size_t)vmap[(size_t)x]] = w.vhome[(size_t)x];
    w.support = std::move(nsup);
    w.vhome = std::move(nvh);
    apply_rw(w, rw, nx);
}

// Remove a redundant free valence-2 vertex, concatenating its two edges.
// The combined edge keeps the id and name of the first edge around the
// vertex and runs from that edge's far endpoint to the other's.
void w_merge_at(Work& w, int z) {
    {
        const GG& g0 = w.cur->g;
        if (g0.vertex(z).label != 0) internal_error("merge at a labeled vertex");
        auto st0 = g0.star(z);
        if (st0.size() != 2) internal_error("merge at a vertex of valence != 2");
        if (GG::edge_of(st0[0]) == GG::edge_of(st0[1])) internal_error("merge across a circle");
        if (w.cur->basepoint == z) w_rebase(w, g0.to(st0[0]));
    }
    const MarkedGraph& X = *w.cur;
    const GG& g = X.g;
    const auto st = g.star(z);
    const int d1 = st[0], d2 = st[1];
    const int e_a = GG::edge_of(d1), e_b = GG::edge_of(d2);
    const int ua = g.to(d1), ub = g.to(d2);
    const Rat la = g.edge(e_a).len, lb = g.edge(e_b).len;

    auto nx = std::make_shared<MarkedGraph>(X.ctx);
    GG& ng = nx->g;
    std::vector<int> vmap((size_t)g.num_vertices(), -1);
    for (int x = 0; x < g.num_vertices(); ++x) {
        if (x == z) continue;
        vmap[(size_t)x] = ng.add_vertex(g.vertex(x).name, g.vertex(x).label);
    }
    std::vector<int> emap((size_t)g.num_edges(), -1);
    for (int i = 0; i < g.num_edges(); ++i) {
        if (i == e_b) continue;
        const auto& ed = g.edge(i);
        if (i == e_a)
            emap[(size_t)i] = ng.add_edge(ed.name, vmap[(size_t)ua], vmap[(size_t)ub], la + lb);
        else
            emap[(size_t)i] = ng.add_edge(ed.name, vmap[(size_t)ed.from], vmap[(size_t)ed.to], ed.len);
    }
    const int E = emap[(size_t)e_a];
    nx->basepoint = vmap[(size_t)X.basepoint];

    const bool ta = X.is_tree_edge(e_a), tb = X.is_tree_edge(e_b);
    if (!ta && !tb) internal_error("valence-2 vertex off the spanning tree");
    for (int t : X.tree_edges) {
        if (t == e_a || t == e_b) continue;
        nx->tree_edges.push_back(emap[(size_t)t]);
    }
    if (ta && tb) nx->tree_edges.push_back(E);
    std::sort(nx->tree_edges.begin(), nx->tree_edges.end());
    nx->edge_words.assign((size_t)ng.num_edges(), Word::identity());
    for (int i = 0; i < g.num_edges(); ++i)
        if (i != e_a && i != e_b) nx->edge_words[(size_t)emap[(size_t)i]] = X.edge_words[(size_t)i];
    if (!(ta && tb)) {
        auto ow = [&X](int o) {
            const Word& we = X.edge_words[(size_t)GG::edge_of(o)];
            return GG::is_rev(o) ? invert(*X.ctx, we) : we;
        };
        nx->edge_words[(size_t)E] = multiply(*X.ctx, ow(GG::rev(d1)), ow(d2));
    }
    nx->factor_words = X.factor_words;

    PathRewriter rw;
    rw.src = &g;
    rw.dst = &ng;
    const int pe = GG::pos(E), ne = GG::neg(E);
    rw.map_point = [&ng, vmap, emap, e_a, e_b, d1, d2, la, lb, E, z](const GraphPoint& x)
        -> GraphPoint {
        if (x.is_vertex()) {
            if (x.vertex == z) return point_at(ng, GG::pos(E), la);
            return GraphPoint::at_vertex(vmap[(size_t)x.vertex]);
        }
        if (x.edge == e_a) {
            const Rat off = (GG::rev(d1) == GG::pos(e_a)) ? x.offset : la - x.offset;
            return point_at(ng, GG::pos(E), off);
        }
        if (x.edge == e_b) {
            const Rat off = (d2 == GG::pos(e_b)) ? x.offset : lb - x.offset;
            return point_at(ng, GG::pos(E), la + off);
        }
        return point_at(ng, GG::pos(emap[(size_t)x.edge]), x.offset);
    };
    rw.map_seg = [emap, e_a, e_b, d1, d2, la, lb, pe, ne](int o, const Rat& a, const Rat& b,
                                                          Path& out) {
        const int e = GG::edge_of(o);
        if (e == e_a) {
            if (o == GG::rev(d1))
                out.push_seg(Seg{pe, a, b});
            else
                out.push_seg(Seg{ne, a + lb, b + lb});
        } else if (e == e_b) {
            if (o == d2)
                out.push_seg(Seg{pe, a + la, b + la});
            else
                out.push_seg(Seg{ne, a, b});
        } else {
            out.push_seg(Seg{oriented_remap(o, emap), a, b});
        }
    };
    rw.map_letter = [](int, int, Token tok, int) { return tok; };
    for (const Path& p : X.gen_loops) nx->gen_loops.push_back(rw.apply(p));
    for (const Path& p : X.factor_paths) nx->factor_paths.push_back(rw.apply(p));

    auto dirsup = [&w](int o) {
        const Path& s = w.support[(size_t)GG::edge_of(o)];
        return GG::is_rev(o) ? s.reversed(w.base->g) : s;
    };
    std::vector<Path> nsup((size_t)ng.num_edges());
    for (int i = 0; i < g.num_edges(); ++i)
        if (i != e_a && i != e_b) nsup[(size_t)emap[(size_t)i]] = w.support[(size_t)i];
    nsup[(size_t)E] = concat(w.base->g, dirsup(GG::rev(d1)), dirsup(d2));
    std::vector<GraphPoint> nvh((size_t)ng.num_vertices());
    for (int x = 0; x < g.num_vertices(); ++x)
        if (x != z) nvh[(size_t)vmap[(size_t)x]] = w.vhome[(size_t)x];
    w.support = std::move(nsup);
    w.vhome = std::move(nvh);
    apply_rw(w, rw, nx);
}

struct Dsu {
    std::vector<int> parent;
    explicit Dsu(int n) : parent((size_t)n) {
        for (int i = 0; i < n; ++i) parent[(size_t)i] = i;
    }
    int find(int x) {
        while (parent[(size_t)x] != x) x = parent[(size_t)x] = parent[(size_t)parent[(size_t)x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (a < b) std::swap(a, b);
        parent[(size_t)a] = b;  // keep the smallest id as the root
        return true;
    }
};

// Collapse every edge in `edges` to a point. The set must be a forest, each
// component containing at most one labeled vertex. The component vertex takes
// the labeled member's identity when present, else the basepoint's, else the
// smallest member's.
void w_collapse(Work& w, const std::vector<int>& edges) {
    const MarkedGraph& X = *w.cur;
    const GG& g = X.g;
    std::set<int> F(edges.begin(), edges.end());
    for (int e : F)
        if (e < 0 || e >= g.num_edges()) throw domain_error("collapse edge out of range");
    if (F.empty()) return;
    Dsu dsu(g.num_vertices());
    for (int e : F)
        if (!dsu.unite(g.edge(e).from, g.edge(e).to))
            throw domain_error("collapse set contains a cycle");
    std::vector<int> home((size_t)g.num_vertices(), -1);
    std::vector<int> labeled((size_t)g.num_vertices(), -1);
    for (int x = 0; x < g.num_vertices(); ++x) {
        int r = dsu.find(x);
        if (home[(size_t)r] < 0) home[(size_t)r] = x;
        if (g.vertex(x).label > 0) {
            if (labeled[(size_t)r] >= 0)
                throw domain_error("collapse would merge two labeled vertices");
            labeled[(size_t)r] = x;
        }
    }
    for (int x = 0; x < g.num_vertices(); ++x) {
        int r = dsu.find(x);
        if (labeled[(size_t)r] >= 0) home[(size_t)r] = labeled[(size_t)r];
    }
    {
        int rb = dsu.find(X.basepoint);
        if (labeled[(size_t)rb] < 0) home[(size_t)rb] = X.basepoint;
    }

    auto nx = std::make_shared<MarkedGraph>(X.ctx);
    GG& ng = nx->g;
    std::vector<int> vmap((size_t)g.num_vertices(), -1);
    for (int x = 0; x < g.num_vertices(); ++x) {
        int h = home[(size_t)dsu.find(x)];
        if (vmap[(size_t)h] < 0) vmap[(size_t)h] = ng.add_vertex(g.vertex(h).name, g.vertex(h).label);
        vmap[(size_t)x] = vmap[(size_t)h];
    }
    std::vector<int> emap((size_t)g.num_edges(), -1);
    for (int i = 0; i < g.num_edges(); ++i) {
        if (F.count(i)) continue;
        const auto& ed = g.edge(i);
        emap[(size_t)i] = ng.add_edge(ed.name, vmap[(size_t)ed.from], vmap[(size_t)ed.to], ed.len);
    }
    nx->basepoint = vmap[(size_t)X.basepoint];

    PathRewriter rw;
    rw.src = &g;
    rw.dst = &ng;
    rw.map_point = [&ng, &g, vmap, emap, F](const GraphPoint& x) -> GraphPoint {
        if (x.is_vertex()) return GraphPoint::at_vertex(vmap[(size_t)x.vertex]);
        if (F.count(x.edge)) return GraphPoint::at_vertex(vmap[(size_t)g.edge(x.edge).from]);
        return point_at(ng, GG::pos(emap[(size_t)x.edge]), x.offset);
    };
    rw.map_seg = [emap, F](int o, const Rat& a, const Rat& b, Path& out) {
        if (F.count(GG::edge_of(o))) return;
        out.push_seg(Seg{oriented_remap(o, emap), a, b});
    };
    const FreeProduct& ctx = *X.ctx;
    rw.map_letter = [&g, &ng, &ctx, vmap](int x, int, Token tok, int) -> Token {
        if (g.vertex(x).label > 0) return tok;
        int lbl = ng.vertex(vmap[(size_t)x]).label;
        return lbl > 0 ? ctx.factor(lbl).identity() : Token(0);
    };
    for (const Path& p : X.gen_loops) nx->gen_loops.push_back(rw.apply(p));
    for (const Path& p : X.factor_paths) nx->factor_paths.push_back(rw.apply(p));

    std::vector<int> einv((size_t)ng.num_edges(), -1);
    for (int i = 0; i < g.num_edges(); ++i)
        if (emap[(size_t)i] >= 0) einv[(size_t)emap[(size_t)i]] = i;
    auto connector = [&g, F](int from, int to) -> Path {
        std::vector<int> via((size_t)g.num_vertices(), -2);
        via[(size_t)from] = -1;
        std::deque<int> queue{from};
        while (!queue.empty() && via[(size_t)to] == -2) {
            int x = queue.front();
            queue.pop_front();
            for (int o : g.star(x)) {
                if (!F.count(GG::edge_of(o))) continue;
                int y = g.to(o);
                if (via[(size_t)y] != -2) continue;
                via[(size_t)y] = o;
                queue.push_back(y);
            }
        }
        if (via[(size_t)to] == -2) internal_error("connector outside the collapsed forest");
        std::vector<int> back;
        for (int x = to; x != from; x = g.from(via[(size_t)x])) back.push_back(via[(size_t)x]);
        std::reverse(back.begin(), back.end());
        return Path::of_edges(g, back);
    };
    reread_words(X, *nx, einv, connector);

    std::vector<Path> nsup((size_t)ng.num_edges());
    for (int i = 0; i < g.num_edges(); ++i)
        if (emap[(size_t)i] >= 0) nsup[(size_t)emap[(size_t)i]] = w.support[(size_t)i];
    std::vector<GraphPoint> nvh((size_t)ng.num_vertices());
    for (int x = 0; x < g.num_vertices(); ++x)
        nvh[(size_t)vmap[(size_t)x]] = w.vhome[(size_t)home[(size_t)dsu.find(x)]];
    w.support = std::move(nsup);
    w.vhome = std::move(nvh);
    apply_rw(w, rw, nx);
}

// Change every edge length, rescaling the quotient data alongside (the
// marked graph rescales its own marking paths; vimg/eimg live outside it).
void w_rescale(Work& w, const std::vector<Rat>& lens) {
    const GG& g = w.cur->g;
    std::vector<Rat> ratio((size_t)g.num_edges(), Rat(1));
    auto nx = std::make_shared<MarkedGraph>(*w.cur);
    for (int e = 0; e < g.num_edges(); ++e) {
        if (!(lens[(size_t)e].sign() > 0)) internal_error("rescaling to a nonpositive length");
        ratio[(size_t)e] = lens[(size_t)e] / g.edge(e).len;
        nx->set_edge_length(e, lens[(size_t)e]);
    }
    const GG& ng = nx->g;
    for (GraphPoint& p : w.vimg)
        if (!p.is_vertex()) p.offset = p.offset * ratio[(size_t)p.edge];
    auto rescale_path = [&](Path& p) {
        GraphPoint s = p.start();
        if (!s.is_vertex()) s.offset = s.offset * ratio[(size_t)s.edge];
        Path np = Path::at_point(s);
        for (const PathAtom& at : p.atoms()) {
            if (const PathLetter* pl = std::get_if<PathLetter>(&at)) {
                np.push_letter(ng, pl->gid, pl->token);
            } else {
                const Seg& sg = std::get<Seg>(at);
                const Rat& r = ratio[(size_t)GG::edge_of(sg.oedge)];
                np.push_seg(Seg{sg.oedge, sg.a * r, sg.b * r});
            }
        }
        p = np;
    };
    for (Path& p : w.eimg) rescale_path(p);
    rescale_path(w.anchor);
    w.cur = nx;
}

// Letter of p sitting exactly at arclength `pos`, if any.
const PathLetter* letter_at(const Path& p, const Rat& pos) {
    Rat acc;
    for (const PathAtom& at : p.atoms()) {
        if (const Seg* sg = std::get_if<Seg>(&at)) {
            acc = acc + (sg->b - sg->a);
            if (acc > pos) return nullptr;
        } else if (acc == pos) {
            return &std::get<PathLetter>(at);
        }
    }
    return nullptr;
}

GraphMap remainder_map(const Work& w) {
    if (!w.f) internal_error("remainder requested without a directing map");
    const GraphMap& f = *w.f;
    const GG& cg = f.B().g;
    std::vector<GraphPoint> vi;
    vi.reserve(w.vhome.size());
    for (const GraphPoint& h : w.vhome) vi.push_back(map_point(f, h));
    std::vector<Path> ei;
    ei.reserve(w.support.size());
    for (const Path& s : w.support) {
        Path img = map_path(f, s);
        // A support starting mid-edge can cut the directing map exactly at a
        // letter. The letter decorates the germ image on this side of the cut
        // (subpath drops boundary letters), so the factorization through the
        // quotient needs it back as the image's lead.
        if (!s.start().is_vertex() && !s.atoms().empty()) {
            if (const Seg* sg = std::get_if<Seg>(&s.atoms().front())) {
                Rat pos = sg->a * f.speed(GG::edge_of(sg->oedge));
                if (const PathLetter* pl = letter_at(f.oedge_image(sg->oedge), pos)) {
                    Path np = Path::at_point(img.start());
                    np.push_letter(cg, pl->gid, pl->token);
                    np.push_path(cg, img);
                    img = np;
                }
            }
        }
        ei.push_back(std::move(img));
    }
    return GraphMap(w.cur, f.B_ptr(), std::move(vi), std::move(ei), f.letter_maps());
}

GraphMap quotient_map(const Work& w) {
    return GraphMap(w.base, w.cur, w.vimg, w.eimg, identity_letter_maps(*w.base->ctx));
}

// Build the quotient map and certify it: structurally sound, a local isometry
// when promised, and carrying the marking of the base exactly onto the
// marking of the current point (tight paths are unique, so path equality is
// a proof of homotopy).
GraphMap certified_quotient(const Work& w, bool isometric) {
    GraphMap q = quotient_map(w);
    auto issues = check_map(q);
    if (!issues.empty()) internal_error("quotient: " + issues.front());
    if (isometric)
        for (int e = 0; e < w.base->g.num_edges(); ++e)
            if (!(q.speed(e) == Rat(1))) internal_error("quotient is not a local isometry");
    const GG& cg = w.cur->g;
    const Path kr = w.anchor.reversed(cg);
    for (size_t j = 0; j < w.base->gen_loops.size(); ++j) {
        Path t = concat(cg, w.anchor, concat(cg, map_path(q, w.base->gen_loops[j]), kr))
                     .tightened(cg);
        if (!(t == w.cur->gen_loops[j])) internal_error("quotient broke a generator loop");
    }
    for (size_t i = 0; i < w.base->factor_paths.size(); ++i) {
        Path t = concat(cg, w.anchor, map_path(q, w.base->factor_paths[i])).tightened(cg);
        if (!(t == w.cur->factor_paths[i])) internal_error("quotient broke a factor path");
    }
    if (w.anchor.atoms().empty() && q.vertex_image(w.base->basepoint).is_vertex()) {
        auto rep = check_represents(q, Automorphism::identity(w.base->ctx));
        if (!rep.empty()) internal_error("quotient: " + rep.front());
    }
    return q;
}

// Merge redundant free valence-2 vertices. With a directing map the merge
// happens only where the map runs straight through at equal speeds (a bent
// or speed-changing vertex stays, as a pending fold kept visible); without
// one, unconditionally.
void cleanup_merges(Work& w) {
    while (true) {
        const GG& g = w.cur->g;
        std::optional<GraphMap> fc;
        if (w.f) fc.emplace(remainder_map(w));
        int target = -1;
        for (int z = 0; z < g.num_vertices() && target < 0; ++z) {
            if (g.vertex(z).label != 0) continue;
            auto st = g.star(z);
            if (st.size() != 2) continue;
            if (GG::edge_of(st[0]) == GG::edge_of(st[1])) continue;  // a circle component
            if (fc) {
                const Rat& s1 = fc->speed(GG::edge_of(st[0]));
                const Rat& s2 = fc->speed(GG::edge_of(st[1]));
                if (!(s1 == s2)) continue;
                if (!is_legal_turn(*fc, Germ{0, st[0]}, Germ{0, st[1]})) continue;
            }
            target = z;
        }
        if (target < 0) return;
        w_merge_at(w, target);
    }
}

bool has_pending_merge(const Work& w) {
    const GG& g = w.cur->g;
    for (int z = 0; z < g.num_vertices(); ++z) {
        if (g.vertex(z).label != 0) continue;
        auto st = g.star(z);
        if (st.size() == 2 && GG::edge_of(st[0]) != GG::edge_of(st[1])) return true;
    }
    return false;
}

// Basepoint convention: a free vertex when one exists, else the G_1 vertex.
void restore_convention(Work& w) {
    const GG& g = w.cur->g;
    int free_v = -1;
    for (int v = 0; v < g.num_vertices() && free_v < 0; ++v)
        if (g.vertex(v).label == 0) free_v = v;
    if (free_v >= 0) {
        if (g.vertex(w.cur->basepoint).label != 0) w_rebase(w, free_v);
    } else {
        int v1 = g.labeled_vertex(1);
        if (v1 >= 0) w_rebase(w, v1);
    }
}

// Arclength (in the codomain) of the common prefix of the two germ images.
// Callers check equality of the image directions first, which covers the
// leading letters; segments and interior letters are then compared in step.
Rat common_image_prefix(const GraphMap& f, const Turn& t) {
    const Path& pa = f.oedge_image(t.a.oedge);
    const Path& pb = f.oedge_image(t.b.oedge);
    const auto& va = pa.atoms();
    const auto& vb = pb.atoms();
    size_t ia = 0, ib = 0;
    while (ia < va.size() && std::holds_alternative<PathLetter>(va[ia])) ++ia;
    while (ib < vb.size() && std::holds_alternative<PathLetter>(vb[ib])) ++ib;
    Rat done_a, done_b;  // consumed part of the current segments
    Rat total;
    while (ia < va.size() && ib < vb.size()) {
        const bool la = std::holds_alternative<PathLetter>(va[ia]);
        const bool lb = std::holds_alternative<PathLetter>(vb[ib]);
        if (la || lb) {
            if (!la || !lb) break;
            if (!(std::get<PathLetter>(va[ia]) == std::get<PathLetter>(vb[ib]))) break;
            ++ia;
            ++ib;
            continue;
        }
        const Seg& sa = std::get<Seg>(va[ia]);
        const Seg& sb = std::get<Seg>(vb[ib]);
        if (sa.oedge != sb.oedge) break;
        const Rat ra = sa.a + done_a, rb = sb.a + done_b;
        if (!(ra == rb)) break;
        const Rat adv = std::min(sa.b - ra, sb.b - rb);
        total = total + adv;
        done_a = done_a + adv;
        done_b = done_b + adv;
        if (sa.a + done_a == sa.b) {
            ++ia;
            done_a = Rat(0);
        }
        if (sb.a + done_b == sb.b) {
            ++ib;
            done_b = Rat(0);
        }
    }
    return total;
}

struct TurnInfo {
    int v = -1;
    int label = 0;
    bool loop = false;  // the two germs are the two ends of one edge
    Rat speed;
};

TurnInfo check_turn(const GraphMap& f, const Turn& t) {
    const GG& g = f.A().g;
    const int oa = t.a.oedge, ob = t.b.oedge;
    if (oa < 0 || ob < 0 || oa >= 2 * g.num_edges() || ob >= 2 * g.num_edges())
        throw domain_error("turn direction out of range");
    TurnInfo info;
    info.v = g.from(oa);
    if (g.from(ob) != info.v) throw domain_error("turn germs based at different vertices");
    info.label = g.vertex(info.v).label;
    if (info.label == 0 && (t.a.pre != 0 || t.b.pre != 0))
        throw domain_error("letter-decorated germs at a free vertex");
    if (oa == ob) {
        if (info.label == 0 || t.a.pre == t.b.pre) throw domain_error("degenerate turn");
        throw domain_error("fold would create an edge with a nontrivial stabilizer");
    }
    info.loop = GG::edge_of(oa) == GG::edge_of(ob);
    const Rat& sa = f.speed(GG::edge_of(oa));
    const Rat& sb = f.speed(GG::edge_of(ob));
    if (!(sa == sb)) throw domain_error("fold requires equal speeds on the two sides");
    if (!(sa.sign() > 0)) throw domain_error("fold along a collapsed direction");
    info.speed = sa;
    if (!(direction_of(f, t.a) == direction_of(f, t.b))) throw domain_error("non-foldable turn");
    return info;
}

Rat raw_fold_bound(const GraphMap& f, const Turn& t, const TurnInfo& info) {
    Rat m = common_image_prefix(f, t) / info.speed;
    if (m.is_zero()) throw domain_error("non-foldable turn");
    return m;
}

}  // namespace

std::string turn_str(const MetricGraphOfGroups& g, const Turn& t) {
    auto side = [&g](const Germ& gm) {
        std::string s;
        if (gm.pre != 0) s += "<" + std::to_string(gm.pre) + ">";
        if (GG::is_rev(gm.oedge)) s += "~";
        s += g.edge(GG::edge_of(gm.oedge)).name;
        return s;
    };
    return "(" + side(t.a) + ", " + side(t.b) + ")";
}

std::vector<Turn> foldable_turns(const GraphMap& f) {
    std::vector<Turn> out;
    const MarkedGraph& A = f.A();
    const GG& g = A.g;
    const FreeProduct& ctx = *A.ctx;
    for (int v = 0; v < g.num_vertices(); ++v) {
        const int label = g.vertex(v).label;
        if (label == 0) {
            for (const auto& gate : free_vertex_gates(f, v)) {
                for (size_t i = 0; i + 1 < gate.size(); ++i) {
                    for (size_t j = i + 1; j < gate.size(); ++j) {
                        const Rat& si = f.speed(GG::edge_of(gate[i]));
                        const Rat& sj = f.speed(GG::edge_of(gate[j]));
                        if (!(si == sj) || !(si.sign() > 0)) continue;
                        out.push_back(Turn{Germ{0, gate[i]}, Germ{0, gate[j]}});
                    }
                }
            }
        } else {
            const Token id = ctx.factor(label).identity();
            const auto st = g.star(v);
            for (size_t i = 0; i + 1 < st.size(); ++i) {
                for (size_t j = i + 1; j < st.size(); ++j) {
                    const Rat& si = f.speed(GG::edge_of(st[i]));
                    const Rat& sj = f.speed(GG::edge_of(st[j]));
                    if (!(si == sj) || !(si.sign() > 0)) continue;
                    auto wit = gate_witness(f, st[i], st[j]);
                    if (!wit) continue;
                    out.push_back(Turn{Germ{id, st[i]}, Germ{*wit, st[j]}});
                }
            }
        }
    }
    return out;
}

Rat max_fold_amount(const GraphMap& f, const Turn& turn) {
    const TurnInfo info = check_turn(f, turn);
    const GG& g = f.A().g;
    Rat m = raw_fold_bound(f, turn, info);
    if (info.loop) {
        const Rat& L = g.edge(GG::edge_of(turn.a.oedge)).len;
        if (!(m + m < L)) throw domain_error("fold would collapse an essential loop");
        return m;
    }
    const Rat& L1 = g.edge(GG::edge_of(turn.a.oedge)).len;
    const Rat& L2 = g.edge(GG::edge_of(turn.b.oedge)).len;
    if (L1 < m) m = L1;
    if (L2 < m) m = L2;
    if (m == L1 && m == L2 && g.to(turn.a.oedge) == g.to(turn.b.oedge))
        throw domain_error("fold would collapse an essential loop");
    return m;
}

FoldResult fold(const GraphMap& f, const Turn& turn, const Rat& amount) {
    const TurnInfo info = check_turn(f, turn);
    const std::shared_ptr<const MarkedGraph>& Xp = f.A_ptr();
    const GG& g = Xp->g;
    const Rat raw = raw_fold_bound(f, turn, info);
    const int e1 = GG::edge_of(turn.a.oedge), e2 = GG::edge_of(turn.b.oedge);
    const Rat& L1 = g.edge(e1).len;
    const Rat& L2 = g.edge(e2).len;
    Rat cap = raw;
    if (!info.loop) {
        if (L1 < cap) cap = L1;
        if (L2 < cap) cap = L2;
    }
    if (amount.sign() < 0 || amount > cap) throw domain_error("fold amount out of range");
    if (info.loop && !(amount + amount < L1))
        throw domain_error("fold would collapse an essential loop");
    FoldMove move{turn, amount, cap, false, false};
    if (amount.is_zero()) return FoldResult{Xp, identity_map(Xp), f, move};

    Work w = make_work(Xp, &f);
    if (info.loop) {
        const int h1 = w_subdivide(w, e1, amount);
        const int h2 = w_subdivide(w, h1, L1 - amount - amount);
        Germ ga{turn.a.pre, -1}, gb{turn.b.pre, -1};
        if (!GG::is_rev(turn.a.oedge)) {
            ga.oedge = GG::pos(e1);
            gb.oedge = GG::neg(h2);
        } else {
            ga.oedge = GG::neg(h2);
            gb.oedge = GG::pos(e1);
        }
        w_full_fold(w, ga, gb);
    } else {
        move.full_a = (amount == L1);
        move.full_b = (amount == L2);
        Germ ga = turn.a, gb = turn.b;
        if (!move.full_a) {
            if (!GG::is_rev(turn.a.oedge)) {
                w_subdivide(w, e1, amount);
                ga.oedge = GG::pos(e1);
            } else {
                ga.oedge = GG::neg(w_subdivide(w, e1, L1 - amount));
            }
        }
        if (!move.full_b) {
            if (!GG::is_rev(turn.b.oedge)) {
                w_subdivide(w, e2, amount);
                gb.oedge = GG::pos(e2);
            } else {
                gb.oedge = GG::neg(w_subdivide(w, e2, L2 - amount));
            }
        }
        w_full_fold(w, ga, gb);
    }
    cleanup_merges(w);
    restore_convention(w);
    ValidateOptions vo;
    vo.require_minimal = !has_pending_merge(w);
    auto issues = validate(*w.cur, vo);
    if (!issues.empty()) internal_error("folded point: " + issues.front());

    GraphMap q = certified_quotient(w, /*isometric=*/true);
    GraphMap ft = remainder_map(w);
    if (f.lip() < ft.lip()) internal_error("fold increased the stretch");
    if (ft.lip() == f.lip()) {
        std::set<int> tense;
        for (int e : f.tension_edges()) tense.insert(e);
        for (int e : ft.tension_edges())
            for (const PathAtom& at : w.support[(size_t)e].atoms())
                if (const Seg* s = std::get_if<Seg>(&at))
                    if (!tense.count(GG::edge_of(s->oedge)))
                        internal_error("tension graph escaped its image");
    }
    {
        GraphMap back = compose(ft, q);
        for (int v = 0; v < g.num_vertices(); ++v)
            if (!(back.vertex_image(v) == f.vertex_image(v)))
                internal_error("fold factorization broke a vertex image");
        for (int e = 0; e < g.num_edges(); ++e)
            if (!(back.edge_image(e) == f.edge_image(e)))
                internal_error("fold factorization broke an edge image");
    }
    if (!(covolume(*w.cur) == covolume(*Xp) - amount))
        internal_error("fold changed the volume by the wrong amount");
    return FoldResult{w.cur, std::move(q), std::move(ft), std::move(move)};
}

FoldResult complete_simple_fold(const GraphMap& f, const Turn& turn) {
    return fold(f, turn, max_fold_amount(f, turn));
}

FoldingPath folding_path(const GraphMap& f) {
    const GG& g0 = f.A().g;
    for (int e = 0; e < g0.num_edges(); ++e)
        if (!(f.speed(e) == Rat(1)))
            throw domain_error("folding requires a unit-speed directing map");
    FoldingPath path;
    path.points.push_back(f.A_ptr());
    path.directing.push_back(f);
    size_t budget = 16 + 4 * (size_t)(g0.num_edges() + g0.num_vertices());
    for (int e = 0; e < g0.num_edges(); ++e) budget += 4 * f.edge_image(e).atoms().size();
    while (true) {
        const GraphMap& cur = path.directing.back();
        auto turns = foldable_turns(cur);
        if (turns.empty()) break;
        FoldResult r = complete_simple_fold(cur, turns.front());
        for (int e = 0; e < r.folded->g.num_edges(); ++e)
            if (!(r.remainder.speed(e) == Rat(1)))
                internal_error("folding step broke the unit-speed invariant");
        path.moves.push_back(r.move);
        path.quotients.push_back(std::move(r.quotient));
        path.points.push_back(r.folded);
        path.directing.push_back(std::move(r.remainder));
        if (path.moves.size() > budget) internal_error("folding exceeded its move budget");
    }
    if (!equal_candidate_lengths(*path.points.back(), path.directing.back().B()))
        internal_error("folding terminated away from the codomain");
    return path;
}

Geodesic geodesic(const MarkedGraph& A, const MarkedGraph& B) {
    {
        auto ia = validate(A);
        if (!ia.empty()) throw domain_error("geodesic endpoint: " + ia.front());
        auto ib = validate(B);
        if (!ib.empty()) throw domain_error("geodesic endpoint: " + ib.front());
    }
    Geodesic geo;
    auto Ap = std::make_shared<const MarkedGraph>(A);
    auto Bp = std::make_shared<const MarkedGraph>(B);
    geo.A = Ap;
    geo.B = Bp;
    const Stretch st = stretch_right(A, B);
    GraphMap f = optimize(change_of_marking_map(Ap, Bp), st.factor);
    if (!(f.lip() == st.factor)) internal_error("optimization missed the stretch factor");
    const TightWitness tw = find_tight_witness(f);
    geo.witness = tw.word;
    if (!(translation_length(B, tw.word) == st.factor * translation_length(A, tw.word)))
        internal_error("the witness is not maximally stretched");
    const GG& ga = Ap->g;
    for (int e = 0; e < ga.num_edges(); ++e) geo.speeds.push_back(f.speed(e));

    Work w = make_work(Ap, &f);
    std::vector<int> zero;
    for (int e = 0; e < ga.num_edges(); ++e)
        if (f.speed(e).is_zero()) zero.push_back(e);
    if (!zero.empty()) w_collapse(w, zero);
    {
        // every surviving edge takes the length of its image
        const GG& gc = w.cur->g;
        std::vector<Rat> lens;
        for (int e = 0; e < gc.num_edges(); ++e) {
            Rat len;
            for (const PathAtom& at : w.support[(size_t)e].atoms())
                if (const Seg* s = std::get_if<Seg>(&at))
                    len = len + f.speed(GG::edge_of(s->oedge)) * (s->b - s->a);
            lens.push_back(len);
        }
        w_rescale(w, lens);
    }
    cleanup_merges(w);
    restore_convention(w);
    ValidateOptions vo;
    vo.require_minimal = !has_pending_merge(w);
    auto issues = validate(*w.cur, vo);
    if (!issues.empty()) internal_error("rescaled point: " + issues.front());
    (void)certified_quotient(w, /*isometric=*/false);
    GraphMap f0 = remainder_map(w);
    for (int e = 0; e < w.cur->g.num_edges(); ++e)
        if (!(f0.speed(e) == Rat(1))) internal_error("the rescaled point is not unit-speed");
    geo.A0 = w.cur;
    geo.leg = folding_path(f0);
    return geo;
}

MarkedGraph geodesic_point(const Geodesic& geo, int leg, const Rat& u) {
    if (u.sign() < 0 || u > Rat(1)) throw domain_error("geodesic parameter out of range");
    if (leg == 0) {
        if (u == Rat(1)) return *geo.A0;
        MarkedGraph X = *geo.A;
        for (int e = 0; e < X.g.num_edges(); ++e) {
            const Rat& S = geo.speeds.at((size_t)e);
            const Rat len = X.g.edge(e).len * ((Rat(1) - u) + u * S);
            if (!(len.sign() > 0)) throw domain_error("geodesic parameter collapses an edge");
            X.set_edge_length(e, len);
        }
        auto issues = validate(X);
        if (!issues.empty()) internal_error("interpolated point: " + issues.front());
        return X;
    }
    const int n = (int)geo.leg.moves.size();
    if (leg < 1 || leg > n) throw domain_error("geodesic leg out of range");
    if (u.is_zero()) return *geo.leg.points[(size_t)(leg - 1)];
    if (u == Rat(1)) return *geo.leg.points[(size_t)leg];
    const FoldMove& mv = geo.leg.moves[(size_t)(leg - 1)];
    FoldResult r = fold(geo.leg.directing[(size_t)(leg - 1)], mv.turn, u * mv.amount);
    return *r.folded;
}

MarkedGraph subdivide_edge(const MarkedGraph& X, int e, const Rat& t) {
    if (e < 0 || e >= X.g.num_edges()) throw domain_error("subdivision edge out of range");
    auto Xp = std::make_shared<const MarkedGraph>(X);
    Work w = make_work(Xp, nullptr);
    w_subdivide(w, e, t);
    restore_convention(w);
    ValidateOptions vo;
    vo.require_minimal = false;
    auto issues = validate(*w.cur, vo);
    if (!issues.empty()) internal_error("subdivided graph: " + issues.front());
    return *w.cur;
}

MarkedGraph collapse_edges(const MarkedGraph& X, const std::vector<int>& edges) {
    auto Xp = std::make_shared<const MarkedGraph>(X);
    Work w = make_work(Xp, nullptr);
    w_collapse(w, edges);
    cleanup_merges(w);
    restore_convention(w);
    auto issues = validate(*w.cur);
    if (!issues.empty()) throw domain_error("collapse left an invalid graph: " + issues.front());
    return *w.cur;
}

std::vector<Turn> equal_direction_turns(const GraphMap& f) {
    std::vector<Turn> out;
    const MarkedGraph& A = f.A();
    const GG& g = A.g;
    const FreeProduct& ctx = *A.ctx;
    for (int v = 0; v < g.num_vertices(); ++v) {
        if (g.vertex(v).label == 0) {
            for (const auto& gate : free_vertex_gates(f, v)) {
                if (direction_of(f, Germ{0, gate.front()}).degenerate()) continue;
                for (size_t i = 0; i + 1 < gate.size(); ++i)
                    for (size_t j = i + 1; j < gate.size(); ++j)
                        out.push_back(Turn{Germ{0, gate[i]}, Germ{0, gate[j]}});
            }
        } else {
            const Token id = ctx.factor(g.vertex(v).label).identity();
            const auto st = g.star(v);
            for (size_t i = 0; i + 1 < st.size(); ++i)
                for (size_t j = i + 1; j < st.size(); ++j)
                    if (auto wit = gate_witness(f, st[i], st[j]))
                        out.push_back(Turn{Germ{id, st[i]}, Germ{*wit, st[j]}});
        }
    }
    return out;
}

Rat shared_image_length(const GraphMap& f, const Turn& t) {
    if (direction_of(f, t.a) != direction_of(f, t.b)) return Rat(0);
    return common_image_prefix(f, t);
}

MarkedGraph fold_point(const MarkedGraph& X, const Turn& turn, const Rat& amount) {
    const GG& g = X.g;
    const int oa = turn.a.oedge, ob = turn.b.oedge;
    if (oa < 0 || ob < 0 || oa >= 2 * g.num_edges() || ob >= 2 * g.num_edges())
        throw domain_error("turn direction out of range");
    const int v = g.from(oa);
    if (g.from(ob) != v) throw domain_error("turn germs based at different vertices");
    const int label = g.vertex(v).label;
    if (label == 0 && (turn.a.pre != 0 || turn.b.pre != 0))
        throw domain_error("letter-decorated germs at a free vertex");
    if (oa == ob) {
        if (label == 0 || turn.a.pre == turn.b.pre) throw domain_error("degenerate turn");
        throw domain_error("fold would create an edge with a nontrivial stabilizer");
    }
    const bool loop = GG::edge_of(oa) == GG::edge_of(ob);
    const int e1 = GG::edge_of(oa), e2 = GG::edge_of(ob);
    const Rat& L1 = g.edge(e1).len;
    const Rat& L2 = g.edge(e2).len;
    if (amount.sign() < 0 || (!loop && (amount > L1 || amount > L2)))
        throw domain_error("fold amount out of range");
    if (loop && !(amount + amount < L1))
        throw domain_error("fold would collapse an essential loop");
    if (amount.is_zero()) return X;

    auto Xp = std::make_shared<const MarkedGraph>(X);
    Work w = make_work(Xp, nullptr);
    if (loop) {
        const int h1 = w_subdivide(w, e1, amount);
        const int h2 = w_subdivide(w, h1, L1 - amount - amount);
        Germ ga{turn.a.pre, -1}, gb{turn.b.pre, -1};
        if (!GG::is_rev(oa)) {
            ga.oedge = GG::pos(e1);
            gb.oedge = GG::neg(h2);
        } else {
            ga.oedge = GG::neg(h2);
            gb.oedge = GG::pos(e1);
        }
        w_full_fold(w, ga, gb);
    } else {
        Germ ga = turn.a, gb = turn.b;
        if (amount != L1) {
            if (!GG::is_rev(oa)) {
                w_subdivide(w, e1, amount);
                ga.oedge = GG::pos(e1);
            } else {
                ga.oedge = GG::neg(w_subdivide(w, e1, L1 - amount));
            }
        }
        if (amount != L2) {
            if (!GG::is_rev(ob)) {
                w_subdivide(w, e2, amount);
                gb.oedge = GG::pos(e2);
            } else {
                gb.oedge = GG::neg(w_subdivide(w, e2, L2 - amount));
            }
        }
        w_full_fold(w, ga, gb);
    }
    cleanup_merges(w);
    restore_convention(w);
    auto issues = validate(*w.cur);
    if (!issues.empty()) internal_error("folded point: " + issues.front());
    certified_quotient(w, /*isometric=*/true);
    if (!(covolume(*w.cur) == covolume(X) - amount))
        internal_error("fold changed the volume by the wrong amount");
    return *w.cur;
}

}  // namespace fpo
