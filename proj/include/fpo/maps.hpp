#pragma once

#include <map>
#include <optional>
#include <utility>

#include "fpo/graph.hpp"

namespace fpo {

// ---------------------------------------------------------------------------
// Piecewise-linear maps between marked graphs. A map is stored by its values
// on vertices, tightened image paths of the (positively oriented) edges, and
// a letter action per factor; it is linear (constant speed) on each edge.
// ---------------------------------------------------------------------------

// Point at arc length s along p (0 <= s <= length); letters are ignored.
GraphPoint point_along(const MetricGraphOfGroups& g, const Path& p, const Rat& s);

// Portion of p between arc lengths s <= t. Letters sitting exactly at the
// cut positions are dropped: they carry no length and belong to the germs
// beyond the cut, which the caller reconstructs.
Path subpath(const MetricGraphOfGroups& g, const Path& p, const Rat& s, const Rat& t);

class GraphMap {
public:
    // edge_image[e] runs from the image of edge e's `from` vertex to the
    // image of its `to` vertex; it is tightened on construction. Labeled
    // vertices must map to labeled vertices matching the letter maps.
    GraphMap(std::shared_ptr<const MarkedGraph> a, std::shared_ptr<const MarkedGraph> b,
             std::vector<GraphPoint> vertex_image, std::vector<Path> edge_image,
             std::vector<TokenMap> letter_maps);

    const MarkedGraph& A() const { return *a_; }
    const MarkedGraph& B() const { return *b_; }
    const std::shared_ptr<const MarkedGraph>& A_ptr() const { return a_; }
    const std::shared_ptr<const MarkedGraph>& B_ptr() const { return b_; }

    const GraphPoint& vertex_image(int v) const { return vertex_image_.at(v); }
    const Path& edge_image(int e) const { return edge_image_.at(e); }
    const Path& oedge_image(int o) const;  // oriented (reversed for the neg direction)
    const TokenMap& letter_map(int gid) const { return letter_maps_.at(gid - 1); }
    const TokenMap& letter_map_inverse(int gid) const { return inv_letter_maps_.at(gid - 1); }
    const std::vector<TokenMap>& letter_maps() const { return letter_maps_; }

    // Image length over edge length; the map stretches e uniformly by this.
    const Rat& speed(int e) const { return speed_.at(e); }
    const Rat& lip() const { return lip_; }
    // Edges stretched by exactly lip().
    std::vector<int> tension_edges() const;

private:
    std::shared_ptr<const MarkedGraph> a_, b_;
    std::vector<GraphPoint> vertex_image_;
    std::vector<Path> edge_image_;
    std::vector<Path> oedge_image_;  // 2e = forward, 2e+1 = reversed
    std::vector<TokenMap> letter_maps_, inv_letter_maps_;
    std::vector<Rat> speed_;
    Rat lip_;
};

// Structural soundness as an issue list (empty = sound): shapes, endpoint
// coherence, labeled-vertex compatibility, letter-map validity.
std::vector<std::string> check_map(const GraphMap& f);

// Semantic certificate that f represents phi on markings: for every free
// generator loop and factor letter loop L of the domain, the image reads
// exactly phi of the reading of L. Requires the basepoint to map to the
// basepoint; otherwise readings are compared up to conjugacy and a note is
// emitted. Empty result = certified.
std::vector<std::string> check_represents(const GraphMap& f, const Automorphism& phi);

GraphPoint map_point(const GraphMap& f, const GraphPoint& x);
Path map_path(const GraphMap& f, const Path& p);

GraphMap identity_map(std::shared_ptr<const MarkedGraph> x);
// g after f (f: A -> M, g: M -> B).
GraphMap compose(const GraphMap& g, const GraphMap& f);

// The linear representative with the same vertex images and tightened edge
// images. Stored maps already have this form; provided for pipeline clarity
// and as the place where straightening is made explicit.
GraphMap pl_ize(const GraphMap& f);

// Build a map A -> B realizing the automorphism phi on markings: the
// basepoint maps to the basepoint, the labeled vertex of G_i to the labeled
// vertex of the target factor, remaining vertices to the basepoint. Edge
// images follow the markings; the construction is certified against
// check_represents before returning.
GraphMap realize_hom(std::shared_ptr<const MarkedGraph> a, std::shared_ptr<const MarkedGraph> b,
                     const Automorphism& phi);
// realize_hom with the identity automorphism: the difference-of-markings map.
GraphMap change_of_marking_map(std::shared_ptr<const MarkedGraph> a,
                               std::shared_ptr<const MarkedGraph> b);

// ---------------------------------------------------------------------------
// Directions and gates. A germ at a vertex is an outgoing oriented edge,
// decorated at labeled vertices with a group letter (the germ of [g] e is
// (g, e); the plain germ is (identity, e)). The derivative map sends germs
// to image directions; two germs at a vertex are in the same gate (depth 1)
// when their image directions coincide.
// ---------------------------------------------------------------------------

struct Germ {
    Token pre = 0;   // letter at the vertex (identity token; 0 at free vertices)
    int oedge = -1;  // outgoing oriented edge
};

// Image direction of a germ: the image point, the oriented edge the image
// enters (-1 when the edge image is degenerate), and the coordinate letter
// (letter action of pre times the leading letter of the edge image) when the
// image point is a labeled vertex.
struct ImageDir {
    GraphPoint at;
    int oedge = -1;
    Token coord = 0;

    bool degenerate() const { return oedge < 0; }
    friend bool operator==(const ImageDir& x, const ImageDir& y) {
        return x.at == y.at && x.oedge == y.oedge && x.coord == y.coord;
    }
    friend bool operator!=(const ImageDir& x, const ImageDir& y) { return !(x == y); }
};

ImageDir direction_of(const GraphMap& f, const Germ& g);

// A point with an outgoing direction, the general form of a germ (interior
// points carry no letter). Used to iterate the derivative map.
struct DirectionGerm {
    GraphPoint at;
    Token pre = 0;
    int oedge = -1;

    friend bool operator==(const DirectionGerm& x, const DirectionGerm& y) {
        return x.at == y.at && x.pre == y.pre && x.oedge == y.oedge;
    }
    friend bool operator!=(const DirectionGerm& x, const DirectionGerm& y) { return !(x == y); }
};

// Derivative: the germ of the image path. Throws on degenerate directions
// (zero-length edge images).
DirectionGerm map_germ(const GraphMap& f, const DirectionGerm& g);

// A turn (pair of germs at one vertex) is legal at depth 1 when the image
// directions differ; the degenerate turn (equal germs) is illegal.
bool is_legal_turn(const GraphMap& f, const Germ& g1, const Germ& g2);

// Gates at a free vertex: outgoing oriented edges grouped by image direction.
std::vector<std::vector<int>> free_vertex_gates(const GraphMap& f, int v);

// At a labeled vertex: the unique letter w with Df(1, d1) == Df(w, d2), when
// the underlying image directions agree (nullopt otherwise). The germs (1,d1)
// and (w,d2) then span an illegal turn; all other decorations of d1, d2 are
// legal against each other.
std::optional<Token> gate_witness(const GraphMap& f, int d1, int d2);

// ---------------------------------------------------------------------------
// Optimality: a map attains the minimal Lipschitz constant in its homotopy
// class iff every vertex of the tension subgraph (the union of maximally
// stretched edges) admits two gates among its tension directions. Labeled
// vertices satisfy this automatically (their images are pinned and the germs
// (1,d), (g,d) always split into distinct gates), so the content of the check
// and of the local slides lives at free vertices.
// ---------------------------------------------------------------------------

struct OptimalityReport {
    Rat lip;
    std::vector<int> tension;    // edges at maximal stretch
    std::vector<int> offending;  // free tension vertices with a single gate
    bool optimal = false;
};

OptimalityReport check_optimal(const GraphMap& f);

// Slide images of offending vertices along their common gate direction until
// the Lipschitz constant reaches `target` (the maximal candidate stretch,
// which the minimum equals). Each round moves one vertex to the nearest
// combinatorial event; progress is enforced by the strict lexicographic
// decrease of (lip, number of tension edges).
GraphMap optimize(const GraphMap& f, const Rat& target, int max_rounds = 4096);

// A legal loop in the tension subgraph. Its translation length in A times
// lip equals the translation length of its (mapped) class in B, witnessing
// that lip is exactly the stretch of the map's class.
struct TightWitness {
    Path loop;  // closed, cyclically reduced, legal, inside the tension graph
    Word word;  // reading of the loop conjugated to the basepoint
    Rat lip;
};

// Requires an optimal map (throws otherwise): walks legal turns through the
// tension graph until a cycle closes.
TightWitness find_tight_witness(const GraphMap& f);

// ---------------------------------------------------------------------------
// Gate structures. A gate structure groups the germs at each vertex into
// gates; a turn is legal when its germs lie in distinct gates. The structure
// induced by a map at depth 1 puts two germs in one gate when their image
// directions coincide; deeper structures (see the train-track machinery)
// also merge germs whose directions collide under an iterate of the
// derivative. Letter maps are injective, so a decorated germ never shares a
// gate with a different decoration of itself; at a labeled vertex the
// structure is therefore recorded equivariantly by witness letters: w in
// witnesses[{d1, d2}] means (u, d1) and (u w, d2) share a gate for every u.
// ---------------------------------------------------------------------------

struct GateStructure {
    std::shared_ptr<const MarkedGraph> X;
    // Germs merge when some iterate Df^j, j <= depth, identifies them.
    int depth = 1;
    // True when the computation proved no further iterate merges more.
    bool stabilized = false;
    // Per free vertex: its star partitioned into gates, each gate and the
    // list of gates sorted (labeled vertices keep an empty entry).
    std::vector<std::vector<std::vector<int>>> free_gates;
    // Per pair of star directions d1 < d2 at a labeled vertex: the witness
    // letters merging them. Sound structures have at most one per pair.
    std::map<std::pair<int, int>, std::vector<Token>> witnesses;

    bool same_gate(const Germ& g1, const Germ& g2) const;
    bool legal(const Germ& g1, const Germ& g2) const { return !same_gate(g1, g2); }
    // Number of gates at a free vertex. (At a labeled vertex the count is a
    // multiple of the factor order and never below two; callers that test
    // the two-gate condition only need the free vertices.)
    int gate_count(int v) const;
};

// Structural equality of the partition data (depth bookkeeping ignored).
bool same_gate_structure(const GateStructure& a, const GateStructure& b);

// The depth-1 structure of a map: gates are the fibers of the direction map.
GateStructure induced_gates(const GraphMap& f);

}  // namespace fpo
