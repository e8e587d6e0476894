#include "fpo/maps.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

namespace fpo {

namespace {

using G = MetricGraphOfGroups;

bool valid_point(const MetricGraphOfGroups& g, const GraphPoint& x) {
    if (x.is_vertex()) return x.vertex >= 0 && x.vertex < g.num_vertices();
    if (x.edge < 0 || x.edge >= g.num_edges()) return false;
    return x.offset.sign() > 0 && x.offset < g.edge(x.edge).len;
}

}  // namespace

GraphPoint point_along(const MetricGraphOfGroups& g, const Path& p, const Rat& s) {
    if (s.sign() < 0) throw domain_error("negative arc length");
    GraphPoint cur = p.start();
    if (s.is_zero()) return cur;
    Rat acc;
    for (const PathAtom& atom : p.atoms()) {
        const Seg* seg = std::get_if<Seg>(&atom);
        if (!seg) continue;
        Rat len = seg->b - seg->a;
        if (acc + len >= s) return point_at(g, seg->oedge, seg->a + (s - acc));
        acc = acc + len;
    }
    throw domain_error("arc length beyond the path");
}

Path subpath(const MetricGraphOfGroups& g, const Path& p, const Rat& s, const Rat& t) {
    if (s > t) throw domain_error("subpath parameters out of order");
    Path out = Path::at_point(point_along(g, p, s));
    if (s == t) return out;
    Rat acc;
    for (const PathAtom& atom : p.atoms()) {
        if (const Seg* seg = std::get_if<Seg>(&atom)) {
            Rat len = seg->b - seg->a;
            Rat lo = acc, hi = acc + len;
            Rat a = std::max(s, lo), b = std::min(t, hi);
            if (a < b) {
                Seg piece;
                piece.oedge = seg->oedge;
                piece.a = seg->a + (a - lo);
                piece.b = seg->a + (b - lo);
                out.push_seg(piece);
            }
            acc = hi;
        } else {
            const PathLetter& l = std::get<PathLetter>(atom);
            if (s < acc && acc < t) out.push_letter(g, l.gid, l.token);
        }
    }
    if (t > acc) throw domain_error("subpath end beyond the path");
    return out;
}

// ---------------------------------------------------------------------------
// GraphMap
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> structural_issues(const MarkedGraph& a, const MarkedGraph& b,
                                           const std::vector<GraphPoint>& vi,
                                           const std::vector<Path>& ei,
                                           const std::vector<TokenMap>& lm) {
    std::vector<std::string> issues;
    if (a.ctx.get() != b.ctx.get()) {
        issues.push_back("domain and codomain do not share a context");
        return issues;
    }
    if ((int)vi.size() != a.g.num_vertices()) issues.push_back("one image point per vertex required");
    if ((int)ei.size() != a.g.num_edges()) issues.push_back("one image path per edge required");
    if ((int)lm.size() != a.ctx->p()) issues.push_back("one letter map per factor required");
    if (!issues.empty()) return issues;
    for (int gid = 1; gid <= a.ctx->p(); ++gid) {
        const TokenMap& m = lm[gid - 1];
        if (m.src != gid) {
            issues.push_back("letter map indexed against the wrong factor");
            continue;
        }
        for (auto& msg : check_token_map(*a.ctx, m)) issues.push_back("letter map: " + msg);
    }
    for (int v = 0; v < a.g.num_vertices(); ++v) {
        if (!valid_point(b.g, vi[v])) {
            issues.push_back("vertex image is not a point of the codomain");
            continue;
        }
        int label = a.g.vertex(v).label;
        if (label > 0 &&
            (!vi[v].is_vertex() || b.g.vertex(vi[v].vertex).label != lm[label - 1].dst))
            issues.push_back("labeled vertex must map to the matching labeled vertex");
    }
    if (!issues.empty()) return issues;
    for (int e = 0; e < a.g.num_edges(); ++e) {
        try {
            ei[e].check(b.g);
        } catch (const domain_error& err) {
            issues.push_back(std::string("edge image: ") + err.what());
            continue;
        }
        if (ei[e].start() != vi[a.g.edge(e).from] || ei[e].end(b.g) != vi[a.g.edge(e).to])
            issues.push_back("edge image endpoints do not match vertex images");
    }
    return issues;
}

}  // namespace

GraphMap::GraphMap(std::shared_ptr<const MarkedGraph> a, std::shared_ptr<const MarkedGraph> b,
                   std::vector<GraphPoint> vertex_image, std::vector<Path> edge_image,
                   std::vector<TokenMap> letter_maps)
    : a_(std::move(a)),
      b_(std::move(b)),
      vertex_image_(std::move(vertex_image)),
      edge_image_(std::move(edge_image)),
      letter_maps_(std::move(letter_maps)) {
    if (!a_ || !b_) throw domain_error("graph map needs a domain and a codomain");
    auto issues = structural_issues(*a_, *b_, vertex_image_, edge_image_, letter_maps_);
    if (!issues.empty()) throw domain_error("graph map: " + issues.front());
    const int ne = a_->g.num_edges();
    oedge_image_.resize(2 * (size_t)ne);
    speed_.resize((size_t)ne);
    for (int e = 0; e < ne; ++e) {
        edge_image_[e] = edge_image_[e].tightened(b_->g);
        oedge_image_[(size_t)G::pos(e)] = edge_image_[e];
        oedge_image_[(size_t)G::neg(e)] = edge_image_[e].reversed(b_->g);
        speed_[e] = edge_image_[e].length(b_->g) / a_->g.edge(e).len;
        if (lip_ < speed_[e]) lip_ = speed_[e];
    }
    inv_letter_maps_.reserve(letter_maps_.size());
    for (const auto& m : letter_maps_) inv_letter_maps_.push_back(invert(*a_->ctx, m));
}

const Path& GraphMap::oedge_image(int o) const { return oedge_image_.at(o); }

std::vector<int> GraphMap::tension_edges() const {
    std::vector<int> out;
    for (int e = 0; e < a_->g.num_edges(); ++e)
        if (speed_[e] == lip_) out.push_back(e);
    return out;
}

std::vector<std::string> check_map(const GraphMap& f) {
    std::vector<GraphPoint> vi;
    std::vector<Path> ei;
    for (int v = 0; v < f.A().g.num_vertices(); ++v) vi.push_back(f.vertex_image(v));
    for (int e = 0; e < f.A().g.num_edges(); ++e) ei.push_back(f.edge_image(e));
    auto issues = structural_issues(f.A(), f.B(), vi, ei, f.letter_maps());
    if (f.lip().is_zero()) issues.push_back("map is constant");
    return issues;
}

// ---------------------------------------------------------------------------
// Applying the map
// ---------------------------------------------------------------------------

GraphPoint map_point(const GraphMap& f, const GraphPoint& x) {
    if (x.is_vertex()) return f.vertex_image(x.vertex);
    Rat arc = x.offset * f.speed(x.edge);
    return point_along(f.B().g, f.edge_image(x.edge), arc);
}

namespace {

// Leading letter token of the image path of a departing germ, as a token of
// the factor at the image vertex (identity when the image starts directly
// with a segment).
Token leading_letter(const GraphMap& f, int oedge, const GroupOracle& img_factor) {
    const Path& p = f.oedge_image(oedge);
    if (!p.atoms().empty())
        if (const PathLetter* l = std::get_if<PathLetter>(&p.atoms().front())) return l->token;
    return img_factor.identity();
}

}  // namespace

Path map_path(const GraphMap& f, const Path& p) {
    PathRewriter rw;
    const MetricGraphOfGroups& ga = f.A().g;
    const MetricGraphOfGroups& gb = f.B().g;
    rw.src = &ga;
    rw.dst = &gb;
    rw.map_point = [&f](const GraphPoint& x) { return map_point(f, x); };
    rw.map_seg = [&f, &gb](int o, const Rat& a, const Rat& b, Path& out) {
        const Rat& s = f.speed(G::edge_of(o));
        out.push_path(gb, subpath(gb, f.oedge_image(o), a * s, b * s));
    };
    rw.map_letter = [&f, &ga, &gb](int v, int arrive, Token tok, int leave) -> Token {
        const GraphPoint& img = f.vertex_image(v);
        int img_label = img.is_vertex() ? gb.vertex(img.vertex).label : 0;
        int label = ga.vertex(v).label;
        if (img_label == 0) {
            if (label > 0 && !f.A().ctx->factor(label).is_identity(tok))
                throw domain_error("nontrivial letter at a vertex with unlabeled image");
            return 0;
        }
        const GroupOracle& gi = f.B().ctx->factor(img_label);
        Token acc = gi.identity();
        if (arrive >= 0) acc = gi.multiply(acc, gi.invert(leading_letter(f, arrive, gi)));
        if (label > 0) acc = gi.multiply(acc, f.letter_map(label).apply(*f.A().ctx, tok));
        if (leave >= 0) acc = gi.multiply(acc, leading_letter(f, leave, gi));
        return acc;
    };
    return rw.apply(p);
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

GraphMap identity_map(std::shared_ptr<const MarkedGraph> x) {
    const MetricGraphOfGroups& g = x->g;
    std::vector<GraphPoint> vi;
    std::vector<Path> ei;
    std::vector<TokenMap> lm;
    for (int v = 0; v < g.num_vertices(); ++v) vi.push_back(GraphPoint::at_vertex(v));
    for (int e = 0; e < g.num_edges(); ++e) ei.push_back(Path::of_edges(g, {G::pos(e)}));
    for (int gid = 1; gid <= x->ctx->p(); ++gid) lm.push_back(identity_token_map(*x->ctx, gid));
    return GraphMap(x, x, std::move(vi), std::move(ei), std::move(lm));
}

GraphMap compose(const GraphMap& g, const GraphMap& f) {
    if (f.B_ptr().get() != g.A_ptr().get())
        throw domain_error("compose: maps do not chain through a common graph");
    const FreeProduct& ctx = *f.A().ctx;
    std::vector<GraphPoint> vi;
    std::vector<Path> ei;
    std::vector<TokenMap> lm;
    for (int v = 0; v < f.A().g.num_vertices(); ++v) vi.push_back(map_point(g, f.vertex_image(v)));
    for (int e = 0; e < f.A().g.num_edges(); ++e) ei.push_back(map_path(g, f.edge_image(e)));
    for (int gid = 1; gid <= ctx.p(); ++gid)
        lm.push_back(compose(ctx, g.letter_map(f.letter_map(gid).dst), f.letter_map(gid)));
    return GraphMap(f.A_ptr(), g.B_ptr(), std::move(vi), std::move(ei), std::move(lm));
}

GraphMap pl_ize(const GraphMap& f) {
    std::vector<GraphPoint> vi;
    std::vector<Path> ei;
    for (int v = 0; v < f.A().g.num_vertices(); ++v) vi.push_back(f.vertex_image(v));
    for (int e = 0; e < f.A().g.num_edges(); ++e) ei.push_back(f.edge_image(e));
    return GraphMap(f.A_ptr(), f.B_ptr(), std::move(vi), std::move(ei), f.letter_maps());
}

// ---------------------------------------------------------------------------
// Realizing an automorphism
// ---------------------------------------------------------------------------

std::vector<std::string> check_represents(const GraphMap& f, const Automorphism& phi) {
    std::vector<std::string> issues;
    const MarkedGraph& a = f.A();
    const MarkedGraph& b = f.B();
    const FreeProduct& ctx = *a.ctx;
    if (phi.ctx_ptr().get() != a.ctx.get()) {
        issues.push_back("automorphism context differs from the map's");
        return issues;
    }
    const GraphPoint img_bp = f.vertex_image(a.basepoint);
    if (!img_bp.is_vertex()) {
        issues.push_back("basepoint image lies inside an edge; cannot certify readings");
        return issues;
    }
    const bool based = img_bp == GraphPoint::at_vertex(b.basepoint);
    auto compare = [&](const Path& loop, const Word& expect, const std::string& what) {
        Path img = map_path(f, loop);
        Word got;
        if (based) {
            got = read_loop_word(b, img);
            if (!(got == expect)) issues.push_back(what + ": image reads the wrong word");
        } else {
            Path t = b.tree_path(img_bp.vertex);
            Path conj = concat(b.g, concat(b.g, t, img), t.reversed(b.g)).tightened(b.g);
            got = read_loop_word(b, conj);
            if (!conjugate_words(ctx, got, expect))
                issues.push_back(what + ": image reads outside the expected conjugacy class");
        }
    };
    for (int j = 0; j < ctx.k(); ++j)
        compare(a.gen_loops[j], phi.gen_image(j), "generator " + ctx.gen_name(j));
    for (int gid = 1; gid <= ctx.p(); ++gid) {
        std::vector<Token> letters;
        if (auto all = ctx.factor(gid).enumerate_nontrivial())
            letters = *all;
        else
            letters = {1, -1};
        for (Token y : letters) {
            Path loop = a.factor_paths[gid - 1];
            loop.push_letter(a.g, gid, y);
            loop.push_path(a.g, a.factor_paths[gid - 1].reversed(a.g));
            compare(loop.tightened(a.g), phi.apply(Word::vertex(ctx, gid, y)),
                    "factor " + std::to_string(gid) + " letter");
        }
    }
    return issues;
}

GraphMap realize_hom(std::shared_ptr<const MarkedGraph> a, std::shared_ptr<const MarkedGraph> b,
                     const Automorphism& phi) {
    if (a->ctx.get() != b->ctx.get() || phi.ctx_ptr().get() != a->ctx.get())
        throw domain_error("realize_hom needs a common context");
    const FreeProduct& ctx = *a->ctx;
    const MetricGraphOfGroups& ga = a->g;
    const MetricGraphOfGroups& gb = b->g;

    std::vector<GraphPoint> vi((size_t)ga.num_vertices());
    for (int v = 0; v < ga.num_vertices(); ++v) {
        int label = ga.vertex(v).label;
        if (label > 0)
            vi[(size_t)v] = GraphPoint::at_vertex(gb.labeled_vertex(phi.target(label)));
        else
            vi[(size_t)v] = GraphPoint::at_vertex(b->basepoint);
    }

    // Connector from the codomain basepoint to each vertex image, chosen so
    // that letter loops read exactly phi of their letters: for the vertex of
    // G_i it is the loop of m_i = phi(K_i) * conj_i followed by the stored
    // factor path of the target.
    std::vector<Path> connect((size_t)ga.num_vertices());
    for (int v = 0; v < ga.num_vertices(); ++v) {
        int label = ga.vertex(v).label;
        if (label > 0) {
            Word m = multiply(ctx, phi.apply(a->factor_words[label - 1]), phi.action(label).conj);
            connect[(size_t)v] =
                concat(gb, word_to_path(*b, m), b->factor_paths[(size_t)(phi.target(label) - 1)])
                    .tightened(gb);
        } else {
            connect[(size_t)v] = Path::at_vertex(b->basepoint);
        }
    }

    std::vector<Path> ei((size_t)ga.num_edges());
    for (int e = 0; e < ga.num_edges(); ++e) {
        int u = ga.edge(e).from, w = ga.edge(e).to;
        Path mid = word_to_path(*b, phi.apply(a->edge_words[(size_t)e]));
        ei[(size_t)e] = concat(gb, concat(gb, connect[(size_t)u].reversed(gb), mid), connect[(size_t)w]);
    }

    std::vector<TokenMap> lm;
    for (int gid = 1; gid <= ctx.p(); ++gid) lm.push_back(phi.action(gid).letters);

    GraphMap f(std::move(a), std::move(b), std::move(vi), std::move(ei), std::move(lm));
    auto cert = check_represents(f, phi);
    if (!cert.empty()) throw domain_error("realize_hom failed certification: " + cert.front());
    return f;
}

GraphMap change_of_marking_map(std::shared_ptr<const MarkedGraph> a,
                               std::shared_ptr<const MarkedGraph> b) {
    auto ctx = a->ctx;
    return realize_hom(std::move(a), std::move(b), Automorphism::identity(std::move(ctx)));
}

// ---------------------------------------------------------------------------
// Directions and gates
// ---------------------------------------------------------------------------

ImageDir direction_of(const GraphMap& f, const Germ& g) {
    const MetricGraphOfGroups& ga = f.A().g;
    const MetricGraphOfGroups& gb = f.B().g;
    int v = ga.from(g.oedge);
    int label = ga.vertex(v).label;
    if (label == 0 && g.pre != 0) throw domain_error("letter germ at a free vertex");
    ImageDir d;
    d.at = f.vertex_image(v);
    auto idir = f.oedge_image(g.oedge).initial_dir();
    if (!idir) return d;  // degenerate
    d.oedge = idir->seg.oedge;
    int img_label = d.at.is_vertex() ? gb.vertex(d.at.vertex).label : 0;
    if (img_label > 0) {
        const GroupOracle& gi = f.B().ctx->factor(img_label);
        Token lead = idir->has_pre ? idir->pre : gi.identity();
        Token alpha = label > 0 ? f.letter_map(label).apply(*f.A().ctx, g.pre) : gi.identity();
        d.coord = gi.multiply(alpha, lead);
    }
    return d;
}

DirectionGerm map_germ(const GraphMap& f, const DirectionGerm& g) {
    const MetricGraphOfGroups& ga = f.A().g;
    const MetricGraphOfGroups& gb = f.B().g;
    if (g.at.is_vertex()) {
        ImageDir d = direction_of(f, Germ{g.pre, g.oedge});
        if (d.degenerate()) throw domain_error("derivative of a germ with degenerate image");
        DirectionGerm out;
        out.at = d.at;
        out.pre = d.coord;
        out.oedge = d.oedge;
        return out;
    }
    if (g.pre != 0) throw domain_error("letter germ at an interior point");
    int e = G::edge_of(g.oedge);
    if (g.at.edge != e) throw domain_error("germ direction off its edge");
    if (f.speed(e).is_zero()) throw domain_error("derivative of a germ on a collapsed edge");
    auto xi = param_on(ga, g.oedge, g.at);
    if (!xi) throw domain_error("germ point not on its oriented edge");
    Rat arc = *xi * f.speed(e);
    const Path& p = f.oedge_image(g.oedge);
    const auto& atoms = p.atoms();
    Rat acc;
    size_t i = 0;
    while (i < atoms.size()) {
        if (const Seg* seg = std::get_if<Seg>(&atoms[i])) {
            Rat len = seg->b - seg->a;
            if (acc + len > arc) break;
            acc = acc + len;
            ++i;
        } else {
            if (acc >= arc) break;
            ++i;
        }
    }
    Token pre = 0;
    int lgid = 0;
    bool have = false;
    while (i < atoms.size()) {
        const PathLetter* l = std::get_if<PathLetter>(&atoms[i]);
        if (!l) break;
        if (!have) {
            pre = l->token;
            lgid = l->gid;
            have = true;
        } else {
            pre = f.B().ctx->factor(lgid).multiply(pre, l->token);
        }
        ++i;
    }
    if (i >= atoms.size()) throw domain_error("germ image runs off the edge image");
    const Seg& seg = std::get<Seg>(atoms[i]);
    DirectionGerm out;
    out.oedge = seg.oedge;
    Rat off = seg.a + (arc - acc);
    out.at = point_at(gb, seg.oedge, off);
    if (out.at.is_vertex()) {
        int img_label = gb.vertex(out.at.vertex).label;
        if (img_label > 0)
            out.pre = have ? pre : f.B().ctx->factor(img_label).identity();
        else if (have)
            throw domain_error("letters at a free vertex of the edge image");
    } else if (have) {
        throw domain_error("letters at an interior point of the edge image");
    }
    return out;
}

bool is_legal_turn(const GraphMap& f, const Germ& g1, const Germ& g2) {
    const MetricGraphOfGroups& ga = f.A().g;
    if (ga.from(g1.oedge) != ga.from(g2.oedge))
        throw domain_error("turn germs at different vertices");
    if (g1.oedge == g2.oedge && g1.pre == g2.pre) return false;
    ImageDir d1 = direction_of(f, g1);
    ImageDir d2 = direction_of(f, g2);
    if (d1.degenerate() || d2.degenerate()) return false;
    return d1 != d2;
}

std::vector<std::vector<int>> free_vertex_gates(const GraphMap& f, int v) {
    if (f.A().g.vertex(v).label != 0) throw domain_error("gate partition is for free vertices");
    std::vector<std::vector<int>> gates;
    std::vector<ImageDir> keys;
    for (int o : f.A().g.star(v)) {
        ImageDir d = direction_of(f, Germ{0, o});
        size_t i = 0;
        while (i < keys.size() && !(keys[i] == d)) ++i;
        if (i == keys.size()) {
            keys.push_back(d);
            gates.emplace_back();
        }
        gates[i].push_back(o);
    }
    return gates;
}

std::optional<Token> gate_witness(const GraphMap& f, int d1, int d2) {
    const MetricGraphOfGroups& ga = f.A().g;
    int v = ga.from(d1);
    if (ga.from(d2) != v) throw domain_error("gate witness germs at different vertices");
    int label = ga.vertex(v).label;
    if (label == 0) throw domain_error("gate witnesses live at labeled vertices");
    const FreeProduct& ctx = *f.A().ctx;
    const GroupOracle& src = ctx.factor(label);
    ImageDir a = direction_of(f, Germ{src.identity(), d1});
    ImageDir b = direction_of(f, Germ{src.identity(), d2});
    if (a.degenerate() || b.degenerate() || a.oedge != b.oedge) return std::nullopt;
    int img_label = f.B().g.vertex(a.at.vertex).label;
    const GroupOracle& dst = ctx.factor(img_label);
    Token diff = dst.multiply(a.coord, dst.invert(b.coord));
    return f.letter_map_inverse(label).apply(ctx, diff);
}

// ---------------------------------------------------------------------------
// Optimality and the local slides
// ---------------------------------------------------------------------------

OptimalityReport check_optimal(const GraphMap& f) {
    OptimalityReport rep;
    rep.lip = f.lip();
    rep.tension = f.tension_edges();
    if (rep.lip.is_zero()) throw domain_error("constant map has no tension graph");
    const MetricGraphOfGroups& g = f.A().g;
    std::vector<std::vector<int>> dirs((size_t)g.num_vertices());
    for (int e : rep.tension) {
        dirs[(size_t)g.from(G::pos(e))].push_back(G::pos(e));
        dirs[(size_t)g.from(G::neg(e))].push_back(G::neg(e));
    }
    for (int v = 0; v < g.num_vertices(); ++v) {
        if (dirs[(size_t)v].empty()) continue;
        if (g.vertex(v).label > 0) continue;  // (1,d) and (g,d) always split gates
        std::vector<ImageDir> distinct;
        for (int o : dirs[(size_t)v]) {
            ImageDir d = direction_of(f, Germ{0, o});
            bool seen = false;
            for (const auto& k : distinct) seen = seen || k == d;
            if (!seen) distinct.push_back(d);
        }
        if (distinct.size() < 2) rep.offending.push_back(v);
    }
    rep.optimal = rep.offending.empty();
    return rep;
}

namespace {

// One slide of the image of vertex v along the common gate direction by step
// t: every edge image at v gets the reversed connector prepended (appended on
// the to-side), and the vertex image moves to the connector's endpoint.
GraphMap slide_vertex(const GraphMap& f, int v, const ImageDir& gate, const Rat& a0,
                      const Rat& t) {
    const MetricGraphOfGroups& ga = f.A().g;
    const MetricGraphOfGroups& gb = f.B().g;
    Path kappa = Path::at_point(gate.at);
    if (gate.at.is_vertex()) {
        int img_label = gb.vertex(gate.at.vertex).label;
        if (img_label > 0) kappa.push_letter(gb, img_label, gate.coord);
    }
    Seg step;
    step.oedge = gate.oedge;
    step.a = a0;
    step.b = a0 + t;
    kappa.push_seg(step);
    Path kbar = kappa.reversed(gb);

    std::vector<GraphPoint> vi;
    std::vector<Path> ei;
    for (int u = 0; u < ga.num_vertices(); ++u) vi.push_back(f.vertex_image(u));
    vi[(size_t)v] = point_at(gb, gate.oedge, a0 + t);
    for (int e = 0; e < ga.num_edges(); ++e) {
        Path p = f.edge_image(e);
        if (ga.edge(e).from == v) p = concat(gb, kbar, p);
        if (ga.edge(e).to == v) p = concat(gb, p, kappa);
        ei.push_back(std::move(p));
    }
    return GraphMap(f.A_ptr(), f.B_ptr(), std::move(vi), std::move(ei), f.letter_maps());
}

}  // namespace

GraphMap optimize(const GraphMap& f0, const Rat& target, int max_rounds) {
    GraphMap f = f0;
    for (int round = 0; round < max_rounds; ++round) {
        if (f.lip() == target) return f;
        if (f.lip() < target) throw domain_error("optimization undershot the target stretch");
        OptimalityReport rep = check_optimal(f);
        if (rep.optimal)
            throw domain_error("map is optimal above the target stretch; the target is not attained");

        const MetricGraphOfGroups& ga = f.A().g;
        const MetricGraphOfGroups& gb = f.B().g;
        int v = rep.offending.front();
        std::set<int> tset(rep.tension.begin(), rep.tension.end());
        ImageDir gate;
        bool have_gate = false;
        std::vector<int> star = ga.star(v);
        for (int o : star) {
            if (!tset.count(G::edge_of(o))) continue;
            gate = direction_of(f, Germ{0, o});
            have_gate = true;
            break;
        }
        if (!have_gate) throw domain_error("offending vertex without tension directions");

        Rat a0;
        if (!gate.at.is_vertex()) a0 = *param_on(gb, gate.oedge, gate.at);

        // Step bounds: reach the far vertex of the gate direction; keep each
        // in-gate germ inside its first image segment; stop where an image
        // length hits zero or two edge speeds cross.
        std::vector<Rat> bounds;
        bounds.push_back(gb.len(gate.oedge) - a0);
        std::map<int, int> coef;  // edge -> d(image length)/dt
        for (int o : star) {
            int e = G::edge_of(o);
            bool in_gate = direction_of(f, Germ{0, o}) == gate;
            coef[e] += in_gate ? -1 : 1;
            if (in_gate) {
                auto idir = f.oedge_image(o).initial_dir();
                bounds.push_back(idir->seg.b - idir->seg.a);
            }
        }
        for (auto [e, c] : coef) {
            Rat len_img = f.edge_image(e).length(gb);
            if (c < 0) bounds.push_back(len_img / Rat(-c));
        }
        for (auto [e, c] : coef) {
            if (c == 0) continue;
            Rat se = f.speed(e);
            Rat sl_e = Rat(c) / ga.edge(e).len;
            for (int e2 = 0; e2 < ga.num_edges(); ++e2) {
                if (e2 == e) continue;
                int c2 = coef.count(e2) ? coef[e2] : 0;
                Rat sl_2 = Rat(c2) / ga.edge(e2).len;
                if (sl_e == sl_2) continue;
                Rat t = (f.speed(e2) - se) / (sl_e - sl_2);
                if (t.sign() > 0) bounds.push_back(t);
            }
        }
        Rat t = bounds.front();
        for (const Rat& b : bounds)
            if (b < t) t = b;
        if (t.sign() <= 0) throw domain_error("slide step degenerated to zero");

        bool accepted = false;
        for (int halving = 0; halving < 40 && !accepted; ++halving) {
            GraphMap fnew = slide_vertex(f, v, gate, a0, t);
            size_t old_tension = rep.tension.size();
            if (fnew.lip() < f.lip() ||
                (fnew.lip() == f.lip() && fnew.tension_edges().size() < old_tension)) {
                f = fnew;
                accepted = true;
            } else {
                t = t / Rat(2);
            }
        }
        if (!accepted) throw domain_error("local slide made no progress");
    }
    throw domain_error("optimization exceeded the round budget");
}

// ---------------------------------------------------------------------------
// Tight witness loops
// ---------------------------------------------------------------------------

TightWitness find_tight_witness(const GraphMap& f) {
    OptimalityReport rep = check_optimal(f);
    if (!rep.optimal) throw domain_error("tight witness requires an optimal map");
    const MetricGraphOfGroups& ga = f.A().g;
    const FreeProduct& ctx = *f.A().ctx;
    std::set<int> tset(rep.tension.begin(), rep.tension.end());

    auto tension_dirs = [&](int v) {
        std::vector<int> out;
        for (int o : ga.star(v))
            if (tset.count(G::edge_of(o))) out.push_back(o);
        return out;
    };
    // Deterministic legal continuation after arriving along o: the letter to
    // insert at to(o) and the next oriented edge.
    auto successor = [&](int o) -> std::pair<Token, int> {
        int v = ga.to(o);
        int beta = G::rev(o);
        auto dirs = tension_dirs(v);
        int label = ga.vertex(v).label;
        if (label == 0) {
            ImageDir db = direction_of(f, Germ{0, beta});
            for (int o2 : dirs)
                if (!(direction_of(f, Germ{0, o2}) == db)) return {0, o2};
            throw domain_error("optimal map lacks a legal continuation");
        }
        const GroupOracle& gi = ctx.factor(label);
        int o2 = dirs.front();
        ImageDir db = direction_of(f, Germ{gi.identity(), beta});
        ImageDir d2 = direction_of(f, Germ{gi.identity(), o2});
        if (!(d2 == db)) return {gi.identity(), o2};
        return {gi.sample_nontrivial(0), o2};
    };

    std::vector<int> seq;
    std::vector<Token> lets;  // lets[m] = letter at from(seq[m]), m >= 1
    std::map<int, int> seen;
    int cur = G::pos(rep.tension.front());
    seq.push_back(cur);
    lets.push_back(0);
    seen[cur] = 0;
    Token wrap = 0;
    int first = -1;
    while (first < 0) {
        auto [z, nxt] = successor(cur);
        auto it = seen.find(nxt);
        if (it != seen.end()) {
            first = it->second;
            wrap = z;
        } else {
            seq.push_back(nxt);
            lets.push_back(z);
            seen[nxt] = (int)seq.size() - 1;
            cur = nxt;
        }
    }

    int base = ga.from(seq[(size_t)first]);
    Path loop = Path::at_vertex(base);
    for (size_t m = (size_t)first; m < seq.size(); ++m) {
        if (m > (size_t)first) {
            int v = ga.from(seq[m]);
            int label = ga.vertex(v).label;
            if (label > 0) loop.push_letter(ga, label, lets[m]);
        }
        loop.push_oedge(ga, seq[m]);
    }
    int base_label = ga.vertex(base).label;
    if (base_label > 0) loop.push_letter(ga, base_label, wrap);

    Path t = f.A().tree_path(base);
    Path based = concat(ga, concat(ga, t, loop), t.reversed(ga)).tightened(ga);
    TightWitness out;
    out.loop = std::move(loop);
    out.word = read_loop_word(f.A(), based);
    out.lip = rep.lip;
    return out;
}

// ---------------------------------------------------------------------------
// Gate structures
// ---------------------------------------------------------------------------

namespace {

void canonicalize_gates(std::vector<std::vector<int>>& gates) {
    for (auto& gate : gates) std::sort(gate.begin(), gate.end());
    std::sort(gates.begin(), gates.end(),
              [](const std::vector<int>& x, const std::vector<int>& y) {
                  return x.front() < y.front();
              });
}

}  // namespace

bool GateStructure::same_gate(const Germ& g1, const Germ& g2) const {
    const MetricGraphOfGroups& g = X->g;
    const int v = g.from(g1.oedge);
    if (g.from(g2.oedge) != v) return false;
    const int label = g.vertex(v).label;
    if (label == 0) {
        if (g1.pre != 0 || g2.pre != 0)
            throw domain_error("letter-decorated germs at a free vertex");
        for (const auto& gate : free_gates.at((size_t)v)) {
            const bool h1 = std::find(gate.begin(), gate.end(), g1.oedge) != gate.end();
            const bool h2 = std::find(gate.begin(), gate.end(), g2.oedge) != gate.end();
            if (h1 || h2) return h1 && h2;
        }
        throw domain_error("germ direction missing from the gate partition");
    }
    const GroupOracle& grp = X->ctx->factor(label);
    if (g1.oedge == g2.oedge) return g1.pre == g2.pre;
    const Germ* lo = &g1;
    const Germ* hi = &g2;
    if (hi->oedge < lo->oedge) std::swap(lo, hi);
    auto it = witnesses.find({lo->oedge, hi->oedge});
    if (it == witnesses.end()) return false;
    const Token w = grp.multiply(grp.invert(lo->pre), hi->pre);
    return std::find(it->second.begin(), it->second.end(), w) != it->second.end();
}

int GateStructure::gate_count(int v) const {
    if (X->g.vertex(v).label != 0) throw domain_error("gate counts are for free vertices");
    return (int)free_gates.at((size_t)v).size();
}

bool same_gate_structure(const GateStructure& a, const GateStructure& b) {
    return a.free_gates == b.free_gates && a.witnesses == b.witnesses;
}

GateStructure induced_gates(const GraphMap& f) {
    GateStructure gs;
    gs.X = f.A_ptr();
    gs.depth = 1;
    gs.stabilized = false;
    const MetricGraphOfGroups& g = gs.X->g;
    gs.free_gates.resize((size_t)g.num_vertices());
    for (int v = 0; v < g.num_vertices(); ++v) {
        if (g.vertex(v).label == 0) {
            gs.free_gates[(size_t)v] = free_vertex_gates(f, v);
            canonicalize_gates(gs.free_gates[(size_t)v]);
            continue;
        }
        const auto st = g.star(v);
        for (size_t i = 0; i + 1 < st.size(); ++i)
            for (size_t j = i + 1; j < st.size(); ++j)
                if (auto w = gate_witness(f, st[i], st[j]))
                    gs.witnesses[{st[i], st[j]}].push_back(*w);
    }
    return gs;
}

}  // namespace fpo
