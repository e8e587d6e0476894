#include "fpo/graph.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <sstream>

namespace fpo {

// ---------------------------------------------------------------------------
// MetricGraphOfGroups
// ---------------------------------------------------------------------------

MetricGraphOfGroups::MetricGraphOfGroups(std::shared_ptr<const FreeProduct> ctx)
    : ctx_(std::move(ctx)) {
    if (!ctx_) throw domain_error("graph needs a free product context");
}

int MetricGraphOfGroups::add_vertex(const std::string& name, int label) {
    if (label < 0 || label > ctx_->p()) throw domain_error("vertex label out of range");
    if (label > 0 && labeled_vertex(label) >= 0)
        throw domain_error("duplicate label " + std::to_string(label));
    if (find_vertex(name) >= 0) throw domain_error("duplicate vertex name " + name);
    vertices_.push_back({name, label});
    return (int)vertices_.size() - 1;
}

int MetricGraphOfGroups::add_vertex(int label) {
    std::string name = "v" + std::to_string(vertices_.size());
    while (find_vertex(name) >= 0) name += "x";
    return add_vertex(name, label);
}

int MetricGraphOfGroups::add_edge(const std::string& name, int u, int v, const Rat& len) {
    if (u < 0 || u >= (int)vertices_.size() || v < 0 || v >= (int)vertices_.size())
        throw domain_error("edge endpoint out of range");
    if (len.sign() <= 0) throw domain_error("edge length must be positive");
    if (find_edge(name) >= 0) throw domain_error("duplicate edge name " + name);
    edges_.push_back({name, u, v, len});
    return (int)edges_.size() - 1;
}

int MetricGraphOfGroups::add_edge(int u, int v, const Rat& len) {
    std::string name = "e" + std::to_string(edges_.size());
    while (find_edge(name) >= 0) name += "x";
    return add_edge(name, u, v, len);
}

void MetricGraphOfGroups::set_length(int e, const Rat& len) {
    if (len.sign() <= 0) throw domain_error("edge length must be positive");
    edges_.at(e).len = len;
}

std::string MetricGraphOfGroups::oedge_name(int o) const {
    const std::string& base = edges_.at(edge_of(o)).name;
    return is_rev(o) ? "~" + base : base;
}

std::vector<int> MetricGraphOfGroups::star(int v) const {
    std::vector<int> out;
    for (int e = 0; e < (int)edges_.size(); ++e) {
        if (edges_[e].from == v) out.push_back(pos(e));
        if (edges_[e].to == v) out.push_back(neg(e));
    }
    return out;
}

bool MetricGraphOfGroups::connected() const {
    if (vertices_.empty()) return false;
    std::vector<char> seen(vertices_.size(), 0);
    std::deque<int> bfs{0};
    seen[0] = 1;
    while (!bfs.empty()) {
        int v = bfs.front();
        bfs.pop_front();
        for (int o : star(v)) {
            int w = to(o);
            if (!seen[w]) {
                seen[w] = 1;
                bfs.push_back(w);
            }
        }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

int MetricGraphOfGroups::betti() const {
    return (int)edges_.size() - (int)vertices_.size() + 1;
}

Rat MetricGraphOfGroups::covolume() const {
    Rat total(0);
    for (const Edge& e : edges_) total = total + e.len;
    return total;
}

int MetricGraphOfGroups::labeled_vertex(int gid) const {
    for (int v = 0; v < (int)vertices_.size(); ++v)
        if (vertices_[v].label == gid) return v;
    return -1;
}

int MetricGraphOfGroups::find_vertex(const std::string& name) const {
    for (int v = 0; v < (int)vertices_.size(); ++v)
        if (vertices_[v].name == name) return v;
    return -1;
}

int MetricGraphOfGroups::find_edge(const std::string& name) const {
    for (int e = 0; e < (int)edges_.size(); ++e)
        if (edges_[e].name == name) return e;
    return -1;
}

GraphPoint point_at(const MetricGraphOfGroups& g, int o, const Rat& x) {
    const Rat& len = g.len(o);
    if (x.sign() < 0 || x > len) throw domain_error("edge parameter out of range");
    if (x.is_zero()) return GraphPoint::at_vertex(g.from(o));
    if (x == len) return GraphPoint::at_vertex(g.to(o));
    GraphPoint p;
    p.edge = MetricGraphOfGroups::edge_of(o);
    p.offset = MetricGraphOfGroups::is_rev(o) ? len - x : x;
    return p;
}

std::optional<Rat> param_on(const MetricGraphOfGroups& g, int o, const GraphPoint& p) {
    const Rat& len = g.len(o);
    if (p.is_vertex()) {
        if (p.vertex == g.from(o)) return Rat(0);
        if (p.vertex == g.to(o)) return len;
        return std::nullopt;
    }
    if (p.edge != MetricGraphOfGroups::edge_of(o)) return std::nullopt;
    return MetricGraphOfGroups::is_rev(o) ? len - p.offset : p.offset;
}

// ---------------------------------------------------------------------------
// Path
// ---------------------------------------------------------------------------

Path Path::at_point(const GraphPoint& p) {
    Path out;
    out.start_ = p;
    return out;
}

Path Path::of_edges(const MetricGraphOfGroups& g, const std::vector<int>& oedges) {
    if (oedges.empty()) throw domain_error("of_edges needs at least one edge");
    Path out = at_vertex(g.from(oedges.front()));
    for (int o : oedges) out.push_oedge(g, o);
    return out;
}

GraphPoint Path::end(const MetricGraphOfGroups& g) const {
    GraphPoint cur = start_;
    for (const PathAtom& a : atoms_)
        if (const Seg* s = std::get_if<Seg>(&a)) cur = point_at(g, s->oedge, s->b);
    return cur;
}

Rat Path::length(const MetricGraphOfGroups&) const {
    Rat total(0);
    for (const PathAtom& a : atoms_)
        if (const Seg* s = std::get_if<Seg>(&a)) total = total + (s->b - s->a);
    return total;
}

bool Path::full_edges(const MetricGraphOfGroups& g) const {
    for (const PathAtom& a : atoms_)
        if (const Seg* s = std::get_if<Seg>(&a))
            if (!s->a.is_zero() || s->b != g.len(s->oedge)) return false;
    return true;
}

std::vector<int> Path::oedges(const MetricGraphOfGroups& g) const {
    if (!full_edges(g)) throw domain_error("oedges() requires a full-edge path");
    std::vector<int> out;
    for (const PathAtom& a : atoms_)
        if (const Seg* s = std::get_if<Seg>(&a)) out.push_back(s->oedge);
    return out;
}

void Path::check(const MetricGraphOfGroups& g) const {
    GraphPoint cur = start_;
    if (cur.is_vertex()) {
        if (cur.vertex < 0 || cur.vertex >= g.num_vertices())
            throw domain_error("path start vertex out of range");
    } else {
        if (cur.edge < 0 || cur.edge >= g.num_edges())
            throw domain_error("path start edge out of range");
        if (cur.offset.sign() <= 0 || cur.offset >= g.edge(cur.edge).len)
            throw domain_error("path start offset out of range");
    }
    for (const PathAtom& a : atoms_) {
        if (const PathLetter* l = std::get_if<PathLetter>(&a)) {
            if (!cur.is_vertex()) throw domain_error("letter not at a vertex");
            int label = g.vertex(cur.vertex).label;
            if (label == 0) throw domain_error("letter at a free vertex");
            if (l->gid != label) throw domain_error("letter group does not match vertex label");
            const GroupOracle& orc = g.ctx().factor(l->gid);
            if (!orc.valid(l->token)) throw domain_error("letter token out of range");
            if (orc.is_identity(l->token)) throw domain_error("identity letter in path");
        } else {
            const Seg& s = std::get<Seg>(a);
            if (s.oedge < 0 || s.oedge >= 2 * g.num_edges())
                throw domain_error("path segment edge out of range");
            if (s.a.sign() < 0 || !(s.a < s.b) || s.b > g.len(s.oedge))
                throw domain_error("path segment parameters out of range");
            if (point_at(g, s.oedge, s.a) != cur)
                throw domain_error("path segments do not chain");
            cur = point_at(g, s.oedge, s.b);
        }
    }
}

Path Path::reversed(const MetricGraphOfGroups& g) const {
    Path out = at_point(end(g));
    for (auto it = atoms_.rbegin(); it != atoms_.rend(); ++it) {
        if (const PathLetter* l = std::get_if<PathLetter>(&*it)) {
            PathLetter r;
            r.gid = l->gid;
            r.token = g.ctx().factor(l->gid).invert(l->token);
            out.atoms_.push_back(r);
        } else {
            const Seg& s = std::get<Seg>(*it);
            const Rat& len = g.len(s.oedge);
            Seg r;
            r.oedge = MetricGraphOfGroups::rev(s.oedge);
            r.a = len - s.b;
            r.b = len - s.a;
            out.atoms_.push_back(r);
        }
    }
    return out;
}

void Path::push_letter(const MetricGraphOfGroups& g, int gid, Token token) {
    if (g.ctx().factor(gid).is_identity(token)) return;
    PathLetter l;
    l.gid = gid;
    l.token = token;
    atoms_.push_back(l);
}

void Path::push_seg(const Seg& s) { atoms_.push_back(s); }

void Path::push_oedge(const MetricGraphOfGroups& g, int o) {
    Seg s;
    s.oedge = o;
    s.a = Rat(0);
    s.b = g.len(o);
    atoms_.push_back(s);
}

void Path::push_path(const MetricGraphOfGroups& g, const Path& q) {
    if (end(g) != q.start_) throw domain_error("push_path: endpoints do not match");
    atoms_.insert(atoms_.end(), q.atoms_.begin(), q.atoms_.end());
}

std::optional<Path::InitialDir> Path::initial_dir() const {
    InitialDir d;
    for (const PathAtom& a : atoms_) {
        if (const PathLetter* l = std::get_if<PathLetter>(&a)) {
            // Multiple leading letters merge in tight paths; take as-is.
            d.pre = l->token;
            d.has_pre = true;
        } else {
            d.seg = std::get<Seg>(a);
            return d;
        }
    }
    return std::nullopt;
}

Path Path::tightened(const MetricGraphOfGroups& g) const {
    const FreeProduct& ctx = g.ctx();
    Path out = at_point(start_);
    std::vector<PathAtom>& st = out.atoms_;
    for (const PathAtom& a : atoms_) {
        if (const PathLetter* l = std::get_if<PathLetter>(&a)) {
            if (ctx.factor(l->gid).is_identity(l->token)) continue;
            if (!st.empty()) {
                if (PathLetter* top = std::get_if<PathLetter>(&st.back())) {
                    Token prod = ctx.factor(l->gid).multiply(top->token, l->token);
                    st.pop_back();
                    if (!ctx.factor(l->gid).is_identity(prod)) {
                        PathLetter m;
                        m.gid = l->gid;
                        m.token = prod;
                        st.push_back(m);
                    }
                    continue;
                }
            }
            st.push_back(*l);
            continue;
        }
        Seg s = std::get<Seg>(a);
        if (!(s.a < s.b)) continue;
        for (;;) {
            if (st.empty() || std::holds_alternative<PathLetter>(st.back())) {
                st.push_back(s);
                break;
            }
            Seg t = std::get<Seg>(st.back());
            const Rat& len = g.len(t.oedge);
            if (t.oedge == s.oedge && t.b == s.a) {
                st.pop_back();
                s.a = t.a;
                continue;
            }
            if (MetricGraphOfGroups::edge_of(t.oedge) == MetricGraphOfGroups::edge_of(s.oedge) &&
                t.oedge != s.oedge && len - s.a == t.b) {
                // s runs backward over t: in t-coordinates it travels from
                // t.b down to c.
                Rat c = len - s.b;
                st.pop_back();
                if (c > t.a) {
                    st.push_back(Seg{t.oedge, t.a, c});
                    break;
                }
                if (c == t.a) break;  // exact cancellation
                // Residual continues past t's start.
                s = Seg{s.oedge, len - t.a, s.b};
                continue;
            }
            st.push_back(s);
            break;
        }
    }
    return out;
}

bool Path::is_tight(const MetricGraphOfGroups& g) const { return *this == tightened(g); }

std::string Path::str(const MetricGraphOfGroups& g) const {
    std::ostringstream os;
    os << '[';
    if (start_.is_vertex())
        os << g.vertex(start_.vertex).name;
    else
        os << g.edge(start_.edge).name << '@' << start_.offset;
    for (const PathAtom& a : atoms_) {
        os << ' ';
        if (const PathLetter* l = std::get_if<PathLetter>(&a)) {
            os << "(g" << l->gid << ':' << l->token << ')';
        } else {
            const Seg& s = std::get<Seg>(a);
            os << g.oedge_name(s.oedge);
            if (!s.a.is_zero() || s.b != g.len(s.oedge)) os << '[' << s.a << ',' << s.b << ']';
        }
    }
    os << ']';
    return os.str();
}

Path concat(const MetricGraphOfGroups& g, const Path& p, const Path& q) {
    Path out = p;
    out.push_path(g, q);
    return out;
}

Path cyclic_tightened(const MetricGraphOfGroups& g, const Path& loop) {
    Path p = loop.tightened(g);
    if (!p.closed(g)) throw domain_error("cyclic_tightened needs a closed path");
    const FreeProduct& ctx = g.ctx();
    std::deque<PathAtom> d(p.atoms().begin(), p.atoms().end());
    GraphPoint base = p.start();
    auto rebuild_tight = [&]() {
        Path out = Path::at_point(base);
        for (const PathAtom& a : d) {
            if (const PathLetter* l = std::get_if<PathLetter>(&a))
                out.push_letter(g, l->gid, l->token);
            else
                out.push_seg(std::get<Seg>(a));
        }
        out = out.tightened(g);
        base = out.start();
        d.assign(out.atoms().begin(), out.atoms().end());
    };
    for (;;) {
        if (d.size() <= 1) break;
        PathAtom& fa = d.front();
        PathAtom& za = d.back();
        const PathLetter* fl = std::get_if<PathLetter>(&fa);
        const PathLetter* zl = std::get_if<PathLetter>(&za);
        if (fl && zl) {
            // Letters meet across the base vertex: combined value Z then A.
            Token prod = ctx.factor(fl->gid).multiply(zl->token, fl->token);
            int gid = fl->gid;
            d.pop_front();
            d.pop_back();
            if (!ctx.factor(gid).is_identity(prod)) {
                PathLetter m;
                m.gid = gid;
                m.token = prod;
                d.push_back(m);
            }
            continue;
        }
        if (fl || zl) break;  // a nontrivial letter at the base blocks reduction
        Seg A = std::get<Seg>(fa);
        Seg Z = std::get<Seg>(za);
        const Rat& len = g.len(Z.oedge);
        if (Z.oedge == A.oedge && Z.b == A.a) {
            // The loop runs straight through the base point: rotate.
            d.pop_front();
            d.pop_back();
            d.push_back(Seg{Z.oedge, Z.a, A.b});
            base = point_at(g, A.oedge, A.b);
            continue;
        }
        if (MetricGraphOfGroups::edge_of(Z.oedge) == MetricGraphOfGroups::edge_of(A.oedge) &&
            Z.oedge != A.oedge && Z.b == len - A.a) {
            // A undoes the tail of Z across the base: in Z-coordinates A
            // travels from Z.b down to c.
            Rat c = len - A.b;
            d.pop_front();
            d.pop_back();
            if (c > Z.a) {
                d.push_back(Seg{Z.oedge, Z.a, c});
                base = point_at(g, Z.oedge, c);
            } else if (c == Z.a) {
                base = point_at(g, Z.oedge, c);
            } else {
                d.push_front(Seg{A.oedge, len - Z.a, A.b});
                base = point_at(g, Z.oedge, Z.a);
            }
            // Interior may now be non-tight near the new ends.
            rebuild_tight();
            continue;
        }
        break;
    }
    Path out = Path::at_point(base);
    for (const PathAtom& a : d) {
        if (const PathLetter* l = std::get_if<PathLetter>(&a))
            out.push_letter(g, l->gid, l->token);
        else
            out.push_seg(std::get<Seg>(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// PathRewriter
// ---------------------------------------------------------------------------

Path PathRewriter::apply(const Path& input) const {
    const MetricGraphOfGroups& sg = *src;
    Path p = input.tightened(sg);
    Path out = Path::at_point(map_point(p.start()));
    GraphPoint cur = p.start();
    int arrive = -1;  // germ at cur along which we arrived (-1 at path start)
    size_t i = 0;
    const auto& atoms = p.atoms();
    const FreeProduct& ctx = sg.ctx();
    while (true) {
        // Collect letters at the current point.
        Token tok = 0;
        bool have = false;
        int gid = 0;
        while (i < atoms.size()) {
            const PathLetter* l = std::get_if<PathLetter>(&atoms[i]);
            if (!l) break;
            if (!have) {
                tok = l->token;
                gid = l->gid;
                have = true;
            } else {
                tok = ctx.factor(gid).multiply(tok, l->token);
            }
            ++i;
        }
        const Seg* next = i < atoms.size() ? std::get_if<Seg>(&atoms[i]) : nullptr;
        if (cur.is_vertex()) {
            int leave = -1;
            if (next && next->a.is_zero()) leave = next->oedge;
            if (!have) {
                gid = sg.vertex(cur.vertex).label;
                tok = gid > 0 ? ctx.factor(gid).identity() : 0;
            }
            Token mapped = map_letter(cur.vertex, arrive, tok, leave);
            GraphPoint where = out.end(*dst);
            int img_label =
                where.is_vertex() ? dst->vertex(where.vertex).label : 0;
            if (img_label > 0) {
                out.push_letter(*dst, img_label, mapped);
            } else if (mapped != 0) {
                throw domain_error("rewritten letter at a non-labeled image point");
            }
        } else if (have) {
            throw domain_error("letter at a non-vertex point");
        }
        if (!next) break;
        map_seg(next->oedge, next->a, next->b, out);
        cur = point_at(sg, next->oedge, next->b);
        arrive = cur.is_vertex() ? MetricGraphOfGroups::rev(next->oedge) : -1;
        ++i;
    }
    return out.tightened(*dst);
}

// ---------------------------------------------------------------------------
// MarkedGraph basics
// ---------------------------------------------------------------------------

bool MarkedGraph::is_tree_edge(int e) const {
    return std::find(tree_edges.begin(), tree_edges.end(), e) != tree_edges.end();
}

Path MarkedGraph::tree_path(int v) const {
    // BFS through tree edges from the basepoint, then walk back.
    std::vector<int> parent(g.num_vertices(), -2);  // oriented edge into vertex
    parent[basepoint] = -1;
    std::deque<int> bfs{basepoint};
    while (!bfs.empty()) {
        int u = bfs.front();
        bfs.pop_front();
        for (int o : g.star(u)) {
            if (!is_tree_edge(MetricGraphOfGroups::edge_of(o))) continue;
            int w = g.to(o);
            if (parent[w] == -2) {
                parent[w] = o;
                bfs.push_back(w);
            }
        }
    }
    if (parent[v] == -2) throw domain_error("vertex not reached by spanning tree");
    std::vector<int> rev_route;
    for (int cur = v; cur != basepoint; cur = g.from(parent[cur])) rev_route.push_back(parent[cur]);
    Path out = Path::at_vertex(basepoint);
    for (auto it = rev_route.rbegin(); it != rev_route.rend(); ++it) out.push_oedge(g, *it);
    return out;
}

void MarkedGraph::set_edge_length(int e, const Rat& len) {
    const Rat old = g.edge(e).len;
    g.set_length(e, len);
    const Rat ratio = len / old;
    auto scale = [&](Path& p) {
        GraphPoint s = p.start();
        if (!s.is_vertex() && s.edge == e) s.offset = s.offset * ratio;
        Path out = Path::at_point(s);
        for (const PathAtom& a : p.atoms()) {
            if (const Seg* sg = std::get_if<Seg>(&a)) {
                Seg t = *sg;
                if (MetricGraphOfGroups::edge_of(t.oedge) == e) {
                    t.a = t.a * ratio;
                    t.b = t.b * ratio;
                }
                out.push_seg(t);
            } else {
                const PathLetter& l = std::get<PathLetter>(a);
                out.push_letter(g, l.gid, l.token);
            }
        }
        p = out;
    };
    for (Path& p : gen_loops) scale(p);
    for (Path& p : factor_paths) scale(p);
}

// ---------------------------------------------------------------------------
// Readings (the inverse marking)
// ---------------------------------------------------------------------------

namespace {

Word read_atoms(const MarkedGraph& X, const Path& p, size_t skip_trailing_letter) {
    const FreeProduct& ctx = *X.ctx;
    Word acc = Word::identity();
    const auto& atoms = p.atoms();
    size_t n = atoms.size() - skip_trailing_letter;
    for (size_t i = 0; i < n; ++i) {
        if (const PathLetter* l = std::get_if<PathLetter>(&atoms[i])) {
            const Word& k = X.factor_words.at(l->gid - 1);
            Word mid = multiply(ctx, k, Word::vertex(ctx, l->gid, l->token));
            acc = multiply(ctx, acc, multiply(ctx, mid, invert(ctx, k)));
        } else {
            const Seg& s = std::get<Seg>(atoms[i]);
            if (!s.a.is_zero() || s.b != X.g.len(s.oedge))
                throw domain_error("reading requires full-edge paths");
            const Word& w = X.edge_words.at(MetricGraphOfGroups::edge_of(s.oedge));
            acc = multiply(ctx, acc, MetricGraphOfGroups::is_rev(s.oedge) ? invert(ctx, w) : w);
        }
    }
    return acc;
}

}  // namespace

Word read_loop_word(const MarkedGraph& X, const Path& loop) {
    if (!(loop.start() == GraphPoint::at_vertex(X.basepoint)))
        throw domain_error("reading requires a loop at the basepoint");
    if (!loop.closed(X.g)) throw domain_error("reading requires a closed loop");
    return read_atoms(X, loop, 0);
}

Word path_factor_word(const MarkedGraph& X, int gid, const Path& p) {
    const FreeProduct& ctx = *X.ctx;
    int vi = X.g.labeled_vertex(gid);
    if (vi < 0) throw domain_error("no labeled vertex for factor");
    if (!(p.start() == GraphPoint::at_vertex(X.basepoint)) ||
        !(p.end(X.g) == GraphPoint::at_vertex(vi)))
        throw domain_error("factor path has wrong endpoints");
    size_t skip = 0;
    Token trailing = ctx.factor(gid).identity();
    if (!p.atoms().empty()) {
        if (const PathLetter* l = std::get_if<PathLetter>(&p.atoms().back())) {
            if (l->gid != gid) throw domain_error("trailing letter in wrong group");
            trailing = l->token;
            skip = 1;
        }
    }
    Word out = read_atoms(X, p, skip);
    out = multiply(ctx, out, X.factor_words.at(gid - 1));
    out = multiply(ctx, out, Word::vertex(ctx, gid, trailing));
    return out;
}

Path word_to_path(const MarkedGraph& X, const Word& w) {
    Path out = Path::at_vertex(X.basepoint);
    for (const Syllable& s : w.syllables()) {
        if (s.is_free()) {
            const Path& loop = X.gen_loops.at(s.gen);
            out.push_path(X.g, s.exp > 0 ? loop : loop.reversed(X.g));
        } else {
            const Path& c = X.factor_paths.at(s.gid - 1);
            out.push_path(X.g, c);
            out.push_letter(X.g, s.gid, s.token);
            out.push_path(X.g, c.reversed(X.g));
        }
    }
    return out.tightened(X.g);
}

Path translation_core(const MarkedGraph& X, const Word& w) {
    return cyclic_tightened(X.g, word_to_path(X, w));
}

Rat translation_length(const MarkedGraph& X, const Word& w) {
    return translation_core(X, w).length(X.g);
}

bool is_elliptic(const MarkedGraph& X, const Word& w) {
    return translation_length(X, w).is_zero();
}

Rat covolume(const MarkedGraph& X) { return X.g.covolume(); }

MarkedGraph rescaled(const MarkedGraph& X, const Rat& factor) {
    if (factor.sign() <= 0) throw domain_error("rescale factor must be positive");
    MarkedGraph Y = X;
    for (int e = 0; e < Y.g.num_edges(); ++e)
        Y.g.set_length(e, X.g.edge(e).len * factor);
    auto scale = [&](Path& p) {
        Path out = Path::at_point([&] {
            GraphPoint q = p.start();
            if (!q.is_vertex()) q.offset = q.offset * factor;
            return q;
        }());
        for (const PathAtom& a : p.atoms()) {
            if (const Seg* s = std::get_if<Seg>(&a))
                out.push_seg(Seg{s->oedge, s->a * factor, s->b * factor});
            else {
                const PathLetter& l = std::get<PathLetter>(a);
                out.push_letter(Y.g, l.gid, l.token);
            }
        }
        p = out;
    };
    for (Path& p : Y.gen_loops) scale(p);
    for (Path& p : Y.factor_paths) scale(p);
    return Y;
}

MarkedGraph rebased(const MarkedGraph& X, int new_basepoint) {
    if (new_basepoint == X.basepoint) return X;
    const FreeProduct& ctx = *X.ctx;
    Path pi = X.tree_path(new_basepoint);  // old base -> new base
    Path pir = pi.reversed(X.g);
    MarkedGraph Y = X;
    Y.basepoint = new_basepoint;
    for (Path& loop : Y.gen_loops)
        loop = concat(X.g, pir, concat(X.g, loop, pi)).tightened(X.g);
    for (Path& c : Y.factor_paths) c = concat(X.g, pir, c).tightened(X.g);
    // New readings: a loop L at the new basepoint reads as the old reading of
    // pi * L * pi^-1.
    for (int e = 0; e < Y.g.num_edges(); ++e) {
        if (Y.is_tree_edge(e)) {
            Y.edge_words[e] = Word::identity();
            continue;
        }
        Path loop = Y.tree_path(Y.g.edge(e).from);
        loop.push_oedge(Y.g, MetricGraphOfGroups::pos(e));
        loop.push_path(Y.g, Y.tree_path(Y.g.edge(e).to).reversed(Y.g));
        Path old_loop = concat(X.g, pi, concat(X.g, loop, pir)).tightened(X.g);
        Y.edge_words[e] = read_loop_word(X, old_loop);
    }
    for (int gid = 1; gid <= ctx.p(); ++gid) {
        Path tp = Y.tree_path(X.g.labeled_vertex(gid));
        Path old_path = concat(X.g, pi, tp).tightened(X.g);
        Y.factor_words[gid - 1] = path_factor_word(X, gid, old_path);
    }
    return Y;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

std::vector<std::string> validate(const MarkedGraph& X, const ValidateOptions& opts) {
    std::vector<std::string> bad;
    auto fail = [&](const std::string& msg) { bad.push_back(msg); };
    const FreeProduct& ctx = *X.ctx;
    const MetricGraphOfGroups& g = X.g;
    const int p = ctx.p();
    const int k = ctx.k();

    if (g.num_vertices() == 0) {
        fail("graph has no vertices");
        return bad;
    }
    for (int e = 0; e < g.num_edges(); ++e)
        if (g.edge(e).len.sign() <= 0) fail("edge " + g.edge(e).name + " has nonpositive length");
    if (!g.connected()) fail("graph is not connected");
    for (int gid = 1; gid <= p; ++gid) {
        int count = 0;
        for (int v = 0; v < g.num_vertices(); ++v)
            if (g.vertex(v).label == gid) ++count;
        if (count != 1)
            fail("label " + std::to_string(gid) + " used " + std::to_string(count) + " times");
    }
    for (int v = 0; v < g.num_vertices(); ++v) {
        int label = g.vertex(v).label;
        int deg = g.degree(v);
        if (label == 0 && opts.require_minimal && deg < 3)
            fail("free vertex " + g.vertex(v).name + " has valence " + std::to_string(deg));
        if (label == 0 && !opts.require_minimal && deg < 2 && g.num_vertices() > 1)
            fail("free vertex " + g.vertex(v).name + " has valence " + std::to_string(deg));
    }
    if (g.betti() != k)
        fail("first Betti number " + std::to_string(g.betti()) + " != free rank " +
             std::to_string(k));
    if (X.basepoint < 0 || X.basepoint >= g.num_vertices()) {
        fail("basepoint out of range");
        return bad;
    }
    bool has_free = false;
    for (int v = 0; v < g.num_vertices(); ++v)
        if (g.vertex(v).label == 0) has_free = true;
    if (has_free && g.vertex(X.basepoint).label != 0)
        fail("basepoint must be a free vertex when one exists");
    if (!has_free && g.vertex(X.basepoint).label != 1)
        fail("basepoint must be the G_1 vertex when no free vertex exists");

    if ((int)X.tree_edges.size() != g.num_vertices() - 1)
        fail("spanning tree has wrong size");
    {
        std::vector<int> uf(g.num_vertices());
        std::iota(uf.begin(), uf.end(), 0);
        std::function<int(int)> find = [&](int a) { return uf[a] == a ? a : uf[a] = find(uf[a]); };
        bool cyc = false;
        for (int e : X.tree_edges) {
            if (e < 0 || e >= g.num_edges()) {
                fail("tree edge out of range");
                return bad;
            }
            int a = find(g.edge(e).from), b = find(g.edge(e).to);
            if (a == b) cyc = true;
            uf[a] = b;
        }
        if (cyc) fail("tree edges contain a cycle");
        for (int v = 0; v < g.num_vertices(); ++v)
            if (find(v) != find(X.basepoint)) {
                fail("tree edges do not span the graph");
                break;
            }
    }
    if (!bad.empty()) return bad;

    if ((int)X.gen_loops.size() != k) fail("wrong number of generator loops");
    if ((int)X.factor_paths.size() != p) fail("wrong number of factor paths");
    if ((int)X.edge_words.size() != g.num_edges()) fail("wrong number of edge words");
    if ((int)X.factor_words.size() != p) fail("wrong number of factor words");
    if (!bad.empty()) return bad;

    try {
        for (int j = 0; j < k; ++j) {
            const Path& loop = X.gen_loops[j];
            loop.check(g);
            if (!(loop.start() == GraphPoint::at_vertex(X.basepoint)) || !loop.closed(g))
                fail("generator loop " + std::to_string(j) + " is not a loop at the basepoint");
            if (!loop.full_edges(g)) fail("generator loop " + std::to_string(j) + " has partial segments");
            if (!loop.is_tight(g)) fail("generator loop " + std::to_string(j) + " is not reduced");
        }
        for (int gid = 1; gid <= p; ++gid) {
            const Path& c = X.factor_paths[gid - 1];
            c.check(g);
            if (!(c.start() == GraphPoint::at_vertex(X.basepoint)))
                fail("factor path " + std::to_string(gid) + " does not start at the basepoint");
            if (!(c.end(g) == GraphPoint::at_vertex(g.labeled_vertex(gid))))
                fail("factor path " + std::to_string(gid) + " does not end at its labeled vertex");
            if (!c.full_edges(g)) fail("factor path " + std::to_string(gid) + " has partial segments");
            if (!c.is_tight(g)) fail("factor path " + std::to_string(gid) + " is not reduced");
        }
        if (!bad.empty()) return bad;

        for (int e = 0; e < g.num_edges(); ++e) {
            if (X.is_tree_edge(e) && !X.edge_words[e].is_identity())
                fail("tree edge " + g.edge(e).name + " has a nontrivial word");
        }
        // nu o mu = id on generators.
        for (int j = 0; j < k; ++j) {
            Word got = read_loop_word(X, X.gen_loops[j]);
            if (got != Word::free_gen(j))
                fail("reading of generator loop " + std::to_string(j) + " is " + got.str(ctx) +
                     ", expected " + ctx.gen_name(j));
        }
        for (int gid = 1; gid <= p; ++gid) {
            Word z = path_factor_word(X, gid, X.factor_paths[gid - 1]);
            bool ok = z.is_identity();
            if (!ok && z.size() == 1 && !z.syllables()[0].is_free() &&
                z.syllables()[0].gid == gid)
                ok = ctx.factor(gid).commutes_with_all(z.syllables()[0].token);
            if (!ok)
                fail("factor " + std::to_string(gid) +
                     " conjugator mismatch: correction word " + z.str(ctx) +
                     " is not central in the factor");
        }
        // mu o nu = id on a generating set of loops.
        for (int e = 0; e < g.num_edges(); ++e) {
            Path loop = X.tree_path(g.edge(e).from);
            loop.push_oedge(g, MetricGraphOfGroups::pos(e));
            loop.push_path(g, X.tree_path(g.edge(e).to).reversed(g));
            loop = loop.tightened(g);
            Word w = read_loop_word(X, loop);
            if (!(word_to_path(X, w) == loop))
                fail("edge word for " + g.edge(e).name + " does not realize its edge loop");
        }
        for (int gid = 1; gid <= p; ++gid) {
            auto all = ctx.factor(gid).enumerate_nontrivial();
            std::vector<Token> samples;
            if (all && all->size() <= 8)
                samples = *all;
            else
                for (uint64_t s = 0; s < 4; ++s)
                    samples.push_back(ctx.factor(gid).sample_nontrivial(s));
            Path tp = X.tree_path(g.labeled_vertex(gid));
            for (Token t : samples) {
                Path loop = tp;
                loop.push_letter(g, gid, t);
                loop.push_path(g, tp.reversed(g));
                loop = loop.tightened(g);
                Word w = read_loop_word(X, loop);
                if (!(word_to_path(X, w) == loop)) {
                    fail("letter loop at factor " + std::to_string(gid) +
                         " is not realized by its reading");
                    break;
                }
            }
        }
    } catch (const std::exception& ex) {
        fail(std::string("validation error: ") + ex.what());
    }
    return bad;
}

MarkedGraph base_marked_graph(std::shared_ptr<const FreeProduct> ctx) {
    MarkedGraph X(ctx);
    MetricGraphOfGroups& g = X.g;
    const int p = ctx->p();
    const int k = ctx->k();
    const Rat one(1);
    if (p == 2 && k == 0) {
        int v1 = g.add_vertex("v1", 1);
        int v2 = g.add_vertex("v2", 2);
        int e = g.add_edge("c", v1, v2, one);
        X.basepoint = v1;
        X.factor_paths.push_back(Path::at_vertex(v1));
        X.factor_paths.push_back(Path::of_edges(g, {MetricGraphOfGroups::pos(e)}));
        X.tree_edges = {e};
        X.edge_words = {Word::identity()};
        X.factor_words = {Word::identity(), Word::identity()};
        return X;
    }
    int hub = g.add_vertex("h", 0);
    X.basepoint = hub;
    for (int gid = 1; gid <= p; ++gid) {
        int v = g.add_vertex("v" + std::to_string(gid), gid);
        int e = g.add_edge("c" + std::to_string(gid), hub, v, one);
        X.tree_edges.push_back(e);
        X.edge_words.push_back(Word::identity());
        X.factor_paths.push_back(Path::of_edges(g, {MetricGraphOfGroups::pos(e)}));
        X.factor_words.push_back(Word::identity());
    }
    for (int j = 0; j < k; ++j) {
        int e = g.add_edge(ctx->gen_name(j), hub, hub, one);
        X.edge_words.push_back(Word::free_gen(j));
        X.gen_loops.push_back(Path::of_edges(g, {MetricGraphOfGroups::pos(e)}));
    }
    return X;
}

}  // namespace fpo
