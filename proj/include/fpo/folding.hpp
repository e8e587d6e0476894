#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fpo/maps.hpp"

namespace fpo {

// ---------------------------------------------------------------------------
// Isometric folds. A turn is an unordered pair of distinct germs at a common
// vertex; folding identifies initial segments of equal length along the two
// directions (at a labeled vertex, twisted by the group element carried by
// the germ decorations). A fold directed by a map f is possible exactly when
// the two germs have the same image direction and their edges move at the
// same positive speed; the quotient map is then a local isometry q with
// f = f_t o q for an induced map f_t of no larger Lipschitz constant.
// ---------------------------------------------------------------------------

struct Turn {
    Germ a, b;
};

std::string turn_str(const MetricGraphOfGroups& g, const Turn& t);

// All turns foldable under f, deterministically ordered: for each vertex,
// pairs of distinct directions with equal image direction (at labeled
// vertices the second germ carries the unique witness letter) and equal
// positive speeds.
std::vector<Turn> foldable_turns(const GraphMap& f);

// Largest amount by which the turn can be folded while the two germ images
// agree: the common image prefix divided by the speed, capped by both edge
// lengths. Throws on non-foldable turns and when the identification would
// collapse an essential loop.
Rat max_fold_amount(const GraphMap& f, const Turn& turn);

struct FoldMove {
    Turn turn;
    Rat amount;      // length identified on each side
    Rat max_amount;  // the complete simple fold bound when the move was made
    bool full_a = false;  // side a is identified along its whole edge
    bool full_b = false;
};

struct FoldResult {
    std::shared_ptr<const MarkedGraph> folded;  // the quotient point
    GraphMap quotient;   // q: domain -> folded, a local isometry (all speeds 1)
    GraphMap remainder;  // f_t: folded -> codomain with f = f_t o q
    FoldMove move;
};

// Fold `turn` by `amount` in the domain of f. The result is cleaned up
// (redundant free valence-2 vertices are merged away unless the directing map
// still bends there, in which case the pending fold is kept visible) and
// revalidated; the quotient is certified to preserve the marking and the
// remainder to satisfy Lip(f_t) <= Lip(f) with the tension graph of f_t
// contained in the image of the tension graph of f whenever equality holds.
// amount == 0 returns the domain unchanged.
FoldResult fold(const GraphMap& f, const Turn& turn, const Rat& amount);

// Fold as far as the two germ images keep agreeing.
FoldResult complete_simple_fold(const GraphMap& f, const Turn& turn);

// ---------------------------------------------------------------------------
// Folding paths. For a directing map with every speed equal to 1, repeatedly
// performing complete simple folds terminates in a point whose candidate
// length vector equals the codomain's; the sequence of breakpoints with the
// moves between them is the isometric folding path.
// ---------------------------------------------------------------------------

struct FoldingPath {
    std::vector<std::shared_ptr<const MarkedGraph>> points;  // n+1 breakpoints
    std::vector<GraphMap> directing;  // per breakpoint: the map onward to the codomain
    std::vector<GraphMap> quotients;  // per move: points[i] -> points[i+1]
    std::vector<FoldMove> moves;      // n moves; moves[i] folds points[i]
};

FoldingPath folding_path(const GraphMap& f);

// ---------------------------------------------------------------------------
// Stretch geodesics. From A to B: optimize a difference-of-marking map to
// realize the right stretch factor, pick a witness loop through the tension
// graph, linearly rescale each edge of A to its image length (edges moving at
// speed zero collapse), then follow the folding path of the induced
// unit-speed map. Along the whole path the translation length of the witness
// realizes the right stretch factor between any two sampled points.
// ---------------------------------------------------------------------------

struct Geodesic {
    std::shared_ptr<const MarkedGraph> A, B;
    std::vector<Rat> speeds;                // per edge of A: its optimal-map speed
    std::shared_ptr<const MarkedGraph> A0;  // end of the rescaling leg
    FoldingPath leg;                        // A0 to a point isometric to B
    Word witness;                           // hyperbolic class stretched maximally
};

Geodesic geodesic(const MarkedGraph& A, const MarkedGraph& B);

// Sample the geodesic. leg 0 interpolates the edge lengths of A linearly
// towards the rescaled point (u in [0,1]; u == 1 returns A0 itself, with the
// zero-speed edges collapsed). leg j >= 1 refolds move j-1 partially: u == 0
// gives leg.points[j-1], u == 1 gives leg.points[j].
MarkedGraph geodesic_point(const Geodesic& geo, int leg, const Rat& u);

// ---------------------------------------------------------------------------
// Bare surgery helpers (marking-preserving; exposed for tests and for the
// train-track machinery).
// ---------------------------------------------------------------------------

// Insert a free valence-2 vertex on edge e at parameter t of the edge's own
// frame (0 < t < length). The first piece keeps the edge id, the tail gets a
// fresh id. Not minimal, by construction; otherwise valid.
MarkedGraph subdivide_edge(const MarkedGraph& X, int e, const Rat& t);

// Collapse each edge in `edges` to a point. The set must be a forest touching
// at most one labeled vertex per component; redundant valence-2 vertices left
// behind are merged away.
MarkedGraph collapse_edges(const MarkedGraph& X, const std::vector<int>& edges);

// All depth-1 illegal turns of f, deterministically ordered: pairs of
// distinct germs sharing an image direction. Unlike foldable_turns, no speed
// condition is imposed; these are the turns a gate-directed point fold acts
// on when the two sides move at different speeds.
std::vector<Turn> equal_direction_turns(const GraphMap& f);

// Arc length (in the codomain) of the common prefix of the two germ image
// paths; zero when the image directions differ. The natural event horizon
// for a fold directed by f: identified prefixes of domain length t stay
// inside the common image while t * speed stays below this on both sides.
Rat shared_image_length(const GraphMap& f, const Turn& t);

// Fold the turn by `amount` as a bare move of the point: initial segments of
// the two germ directions are identified isometrically and the marking is
// transported, with no directing map involved (so no speed condition and no
// remainder factorization; callers that need a map at the folded point
// rebuild one there). Redundant free valence-2 vertices are merged away
// unconditionally, the basepoint convention is restored, and the outcome is
// certified to carry the marking exactly. Throws when the identification
// would collapse an essential loop or merge two labeled vertices.
MarkedGraph fold_point(const MarkedGraph& X, const Turn& turn, const Rat& amount);

}  // namespace fpo
