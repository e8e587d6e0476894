#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fpo/rational.hpp"
#include "fpo/word.hpp"

namespace fpo {

// ---------------------------------------------------------------------------
// Metric graph of groups for a free product: finitely many vertices, each
// either free (label 0) or carrying one vertex group (label 1..p, each label
// used exactly once), and edges with positive rational lengths and trivial
// edge groups. Oriented edges are encoded as 2*edge + direction bit.
// ---------------------------------------------------------------------------

class MetricGraphOfGroups {
public:
    struct Vertex {
        std::string name;
        int label = 0;  // 0 = free, else factor id 1..p
    };
    struct Edge {
        std::string name;
        int from = -1;
        int to = -1;
        Rat len;
    };

    explicit MetricGraphOfGroups(std::shared_ptr<const FreeProduct> ctx);

    const FreeProduct& ctx() const { return *ctx_; }
    std::shared_ptr<const FreeProduct> ctx_ptr() const { return ctx_; }

    int add_vertex(const std::string& name, int label);
    int add_vertex(int label);  // auto-named
    int add_edge(const std::string& name, int u, int v, const Rat& len);
    int add_edge(int u, int v, const Rat& len);  // auto-named

    int num_vertices() const { return (int)vertices_.size(); }
    int num_edges() const { return (int)edges_.size(); }
    const Vertex& vertex(int v) const { return vertices_.at(v); }
    const Edge& edge(int e) const { return edges_.at(e); }
    void set_length(int e, const Rat& len);

    // Oriented edges: pos(e) runs from->to, neg(e) runs to->from.
    static int pos(int e) { return 2 * e; }
    static int neg(int e) { return 2 * e + 1; }
    static int edge_of(int o) { return o / 2; }
    static bool is_rev(int o) { return o & 1; }
    static int rev(int o) { return o ^ 1; }
    int from(int o) const { return is_rev(o) ? edges_[edge_of(o)].to : edges_[edge_of(o)].from; }
    int to(int o) const { return from(rev(o)); }
    const Rat& len(int o) const { return edges_[edge_of(o)].len; }
    std::string oedge_name(int o) const;

    // Oriented edges leaving v, sorted.
    std::vector<int> star(int v) const;
    int degree(int v) const { return (int)star(v).size(); }

    bool connected() const;
    int betti() const;  // first Betti number (assumes connected)
    Rat covolume() const;
    int labeled_vertex(int gid) const;  // -1 if absent

    int find_vertex(const std::string& name) const;  // -1 if absent
    int find_edge(const std::string& name) const;

private:
    std::shared_ptr<const FreeProduct> ctx_;
    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
};

// A point of the geometric realization: a vertex, or an interior point of an
// edge at rational offset from the edge's `from` endpoint (0 < offset < len).
struct GraphPoint {
    int vertex = -1;
    int edge = -1;
    Rat offset;

    static GraphPoint at_vertex(int v) {
        GraphPoint p;
        p.vertex = v;
        return p;
    }
    bool is_vertex() const { return vertex >= 0; }
    friend bool operator==(const GraphPoint& a, const GraphPoint& b) {
        if (a.is_vertex() != b.is_vertex()) return false;
        if (a.is_vertex()) return a.vertex == b.vertex;
        return a.edge == b.edge && a.offset == b.offset;
    }
    friend bool operator!=(const GraphPoint& a, const GraphPoint& b) { return !(a == b); }
};

// Point at parameter x along oriented edge o (x measured in o's direction,
// 0 <= x <= len). Endpoint parameters normalize to vertices.
GraphPoint point_at(const MetricGraphOfGroups& g, int o, const Rat& x);
// Parameter of point p along oriented o, if p lies on o's edge (or its ends).
std::optional<Rat> param_on(const MetricGraphOfGroups& g, int o, const GraphPoint& p);

// ---------------------------------------------------------------------------
// Paths. An edge path is a start point followed by atoms, each either a
// vertex letter (only at labeled vertices; the nontrivial group element one
// passes through) or a segment of an oriented edge from parameter a to b
// (0 <= a < b <= len). Full-edge segments have a = 0, b = len; partial
// segments arise at the ends of point-to-point geodesics.
// ---------------------------------------------------------------------------

struct PathLetter {
    int gid = 0;
    Token token = 0;
    friend bool operator==(const PathLetter& x, const PathLetter& y) {
        return x.gid == y.gid && x.token == y.token;
    }
};

struct Seg {
    int oedge = -1;
    Rat a, b;
    friend bool operator==(const Seg& x, const Seg& y) {
        return x.oedge == y.oedge && x.a == y.a && x.b == y.b;
    }
};

using PathAtom = std::variant<PathLetter, Seg>;

class Path {
public:
    Path() = default;
    static Path at_point(const GraphPoint& p);
    static Path at_vertex(int v) { return at_point(GraphPoint::at_vertex(v)); }
    // Full-edge path along the given oriented edges.
    static Path of_edges(const MetricGraphOfGroups& g, const std::vector<int>& oedges);

    const GraphPoint& start() const { return start_; }
    const std::vector<PathAtom>& atoms() const { return atoms_; }
    bool empty() const { return atoms_.empty(); }

    GraphPoint end(const MetricGraphOfGroups& g) const;
    Rat length(const MetricGraphOfGroups& g) const;
    bool closed(const MetricGraphOfGroups& g) const { return end(g) == start_; }
    // All segments full edges (no partial ends)?
    bool full_edges(const MetricGraphOfGroups& g) const;
    // Oriented edges of the segments in order (requires full_edges).
    std::vector<int> oedges(const MetricGraphOfGroups& g) const;

    // Throws domain_error when atoms do not chain or letters sit at wrong
    // vertices; returns quietly otherwise.
    void check(const MetricGraphOfGroups& g) const;

    Path reversed(const MetricGraphOfGroups& g) const;
    // Reduce rel endpoints: merge letters, cancel backtracking segments.
    Path tightened(const MetricGraphOfGroups& g) const;
    bool is_tight(const MetricGraphOfGroups& g) const;

    // In-place appends; no reduction performed.
    void push_letter(const MetricGraphOfGroups& g, int gid, Token token);
    void push_seg(const Seg& s);
    void push_oedge(const MetricGraphOfGroups& g, int o);
    void push_path(const MetricGraphOfGroups& g, const Path& q);  // q.start must match current end

    // First direction of the path (nullopt for constant paths): the oriented
    // edge of the first segment together with the letter (if any) before it.
    struct InitialDir {
        Token pre = 0;
        bool has_pre = false;
        Seg seg;
    };
    std::optional<InitialDir> initial_dir() const;

    std::string str(const MetricGraphOfGroups& g) const;

    friend bool operator==(const Path& x, const Path& y) {
        return x.start_ == y.start_ && x.atoms_ == y.atoms_;
    }
    friend bool operator!=(const Path& x, const Path& y) { return !(x == y); }

private:
    GraphPoint start_;
    std::vector<PathAtom> atoms_;
};

Path concat(const MetricGraphOfGroups& g, const Path& p, const Path& q);

// Cyclic reduction of a closed path: returns a closed, cyclically reduced
// loop freely homotopic to the input (base point may move).
Path cyclic_tightened(const MetricGraphOfGroups& g, const Path& loop);

// Rewrites paths of one graph into another under a combinatorial map given
// by local data: where points go, how segments map, and how letters (and the
// letter-free crossings of vertices) transform. The letter callback sees each
// visit of a vertex of the source: the germ of arrival (an oriented edge
// leaving the vertex, -1 at the path start), the merged letter token there
// (the factor's identity token when none, 0 at free vertices), and the germ
// of departure (-1 at the path end). It returns a token of the factor of the
// *image* point when that point is a labeled vertex, and 0 otherwise.
struct PathRewriter {
    const MetricGraphOfGroups* src = nullptr;
    const MetricGraphOfGroups* dst = nullptr;
    std::function<GraphPoint(const GraphPoint&)> map_point;
    std::function<void(int oedge, const Rat& a, const Rat& b, Path& out)> map_seg;
    std::function<Token(int vertex, int arrive, Token tok, int leave)> map_letter;

    Path apply(const Path& p) const;
};

// ---------------------------------------------------------------------------
// Marked graphs: a metric graph of groups together with a marking (images of
// the free generators and factor conjugating paths) and its exact inverse
// data (per-edge words and factor conjugators), which together certify that
// the marking is a homotopy equivalence.
// ---------------------------------------------------------------------------

struct MarkedGraph {
    std::shared_ptr<const FreeProduct> ctx;
    MetricGraphOfGroups g;
    int basepoint = -1;
    std::vector<Path> gen_loops;     // k loops at the basepoint
    std::vector<Path> factor_paths;  // p paths basepoint -> labeled vertex
    std::vector<int> tree_edges;     // spanning tree (edge ids)
    std::vector<Word> edge_words;    // per edge: trivial on tree edges
    std::vector<Word> factor_words;  // per factor: conjugator K_i

    explicit MarkedGraph(std::shared_ptr<const FreeProduct> c) : ctx(std::move(c)), g(ctx) {}

    bool is_tree_edge(int e) const;
    // Tree path basepoint -> v (full edges, no letters).
    Path tree_path(int v) const;
    // Change one edge length, rescaling the stored marking paths' segment
    // parameters on that edge so they stay consistent.
    void set_edge_length(int e, const Rat& len);
};

struct ValidateOptions {
    // Require free vertices to have valence >= 3 (fails during intermediate
    // surgery states, where valence-2 free vertices are cleaned up later).
    bool require_minimal = true;
};

// Empty result = valid marked graph: structural conditions, spanning tree,
// marking well-formedness, and the two-sided inverse-marking identities.
std::vector<std::string> validate(const MarkedGraph& X, const ValidateOptions& opts = {});

// Group element of a closed full-edge loop at the basepoint, per the stored
// inverse marking: edges contribute their edge words, a letter g at the
// labeled vertex of G_i contributes K_i g K_i^{-1}.
Word read_loop_word(const MarkedGraph& X, const Path& loop);

// For a full-edge path P from the basepoint to the labeled vertex of G_i
// (with at most a trailing letter h), the conjugator K with
// word-of(P [g] reverse(P)) == K g K^{-1}: K = read(interior) * K_i * h.
Word path_factor_word(const MarkedGraph& X, int gid, const Path& p);

// Realize a group word as a reduced loop at the basepoint.
Path word_to_path(const MarkedGraph& X, const Word& w);

// Cyclically reduced loop representing the free homotopy class of w; its
// length is the translation length (zero iff w acts elliptically).
Path translation_core(const MarkedGraph& X, const Word& w);
Rat translation_length(const MarkedGraph& X, const Word& w);
bool is_elliptic(const MarkedGraph& X, const Word& w);

Rat covolume(const MarkedGraph& X);
MarkedGraph rescaled(const MarkedGraph& X, const Rat& factor);

// Same point of outer space, bookkeeping moved to a new basepoint.
MarkedGraph rebased(const MarkedGraph& X, int new_basepoint);

// Canonical starting point for a signature: a rose with a free hub carrying
// the k generator loops plus one spoke per factor, all edges of unit length.
// For p = 2, k = 0 (where the hub would be a redundant valence-2 vertex) it
// is instead a single edge joining the two labeled vertices. The basepoint
// is the hub when present, otherwise the vertex of G_1.
MarkedGraph base_marked_graph(std::shared_ptr<const FreeProduct> ctx);

}  // namespace fpo
