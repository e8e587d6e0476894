#include "fpo/metric.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <tuple>

namespace fpo {

namespace {

using G = MetricGraphOfGroups;

using SylKey = std::tuple<int, int, int, Token>;
using WordKey = std::vector<SylKey>;

WordKey word_key(const Word& w) {
    WordKey k;
    k.reserve(w.size());
    for (const Syllable& s : w.syllables()) k.emplace_back(s.gid, s.gen, s.exp, s.token);
    return k;
}

// Lexicographically minimal rotation of the cyclic reduction of w or of its
// inverse: the dedup key for conjugacy classes up to inversion.
WordKey canonical_class_key(const FreeProduct& ctx, const Word& w) {
    Word core = cyclic_reduce(ctx, w).first;
    if (core.size() <= 1) return std::min(word_key(core), word_key(invert(ctx, core)));
    WordKey best;
    Word inv = invert(ctx, core);
    for (const Word* u : {&core, &inv}) {
        std::vector<Syllable> syl = u->syllables();
        for (size_t r = 0; r < syl.size(); ++r) {
            std::rotate(syl.begin(), syl.begin() + 1, syl.end());
            WordKey k = word_key(Word(ctx, syl));
            if (best.empty() || k < best) best = std::move(k);
        }
    }
    return best;
}

// --- shape enumeration in the quotient graph --------------------------------

std::vector<int> reverse_cycle(const std::vector<int>& seq) {
    std::vector<int> out;
    out.reserve(seq.size());
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) out.push_back(G::rev(*it));
    return out;
}

std::vector<int> canonical_cycle(const std::vector<int>& seq) {
    std::vector<int> best;
    for (std::vector<int> v : {seq, reverse_cycle(seq)}) {
        for (size_t r = 0; r < v.size(); ++r) {
            std::rotate(v.begin(), v.begin() + 1, v.end());
            if (best.empty() || v < best) best = v;
        }
    }
    return best;
}

// Embedded circles (vertex-distinct closed edge paths), one representative
// per circle up to rotation and reversal.
std::vector<std::vector<int>> embedded_circles(const G& g) {
    std::set<std::vector<int>> seen;
    std::vector<std::vector<int>> out;
    std::vector<int> path;
    std::vector<char> onpath(g.num_vertices(), 0);
    int base = 0;
    std::function<void(int)> dfs = [&](int cur) {
        for (int o : g.star(cur)) {
            if (!path.empty() && o == G::rev(path.back())) continue;
            int w = g.to(o);
            if (w == base) {
                std::vector<int> circ = path;
                circ.push_back(o);
                auto key = canonical_cycle(circ);
                if (seen.insert(key).second) out.push_back(key);
                continue;
            }
            if (w < base || onpath[w]) continue;
            onpath[w] = 1;
            path.push_back(o);
            dfs(w);
            path.pop_back();
            onpath[w] = 0;
        }
    };
    for (base = 0; base < g.num_vertices(); ++base) {
        onpath[base] = 1;
        dfs(base);
        onpath[base] = 0;
    }
    return out;
}

// Embedded arcs from u to v whose interior vertices avoid `forbid`.
std::vector<std::vector<int>> embedded_arcs(const G& g, int u, int v,
                                            const std::set<int>& forbid) {
    std::vector<std::vector<int>> out;
    std::vector<int> path;
    std::vector<char> onpath(g.num_vertices(), 0);
    onpath[u] = 1;
    std::function<void(int)> dfs = [&](int cur) {
        for (int o : g.star(cur)) {
            int w = g.to(o);
            if (w == v) {
                std::vector<int> arc = path;
                arc.push_back(o);
                out.push_back(std::move(arc));
                continue;
            }
            if (onpath[w] || forbid.count(w)) continue;
            onpath[w] = 1;
            path.push_back(o);
            dfs(w);
            path.pop_back();
            onpath[w] = 0;
        }
    };
    dfs(u);
    return out;
}

std::vector<int> circle_vertices(const G& g, const std::vector<int>& circ) {
    std::vector<int> out;
    out.reserve(circ.size());
    for (int o : circ) out.push_back(g.from(o));
    return out;
}

// The circle rotated to start (and end) at w.
std::vector<int> rotate_to(const G& g, const std::vector<int>& circ, int w) {
    for (size_t i = 0; i < circ.size(); ++i)
        if (g.from(circ[i]) == w) {
            std::vector<int> out(circ.begin() + i, circ.end());
            out.insert(out.end(), circ.begin(), circ.begin() + i);
            return out;
        }
    throw domain_error("vertex not on the circle");
}

void push_oedges(Path& p, const G& g, const std::vector<int>& oedges) {
    for (int o : oedges) p.push_oedge(g, o);
}

void push_reversed_oedges(Path& p, const G& g, const std::vector<int>& oedges) {
    for (auto it = oedges.rbegin(); it != oedges.rend(); ++it) p.push_oedge(g, G::rev(*it));
}

Word loop_reading(const MarkedGraph& X, const Path& loop) {
    const G& g = X.g;
    GraphPoint s = loop.start();
    if (!s.is_vertex()) throw domain_error("candidate loop must start at a vertex");
    Path t = X.tree_path(s.vertex);
    Path based = concat(g, concat(g, t, loop), t.reversed(g)).tightened(g);
    return read_loop_word(X, based);
}

void check_signatures(const MarkedGraph& A, const MarkedGraph& B) {
    if (!same_signature(*A.ctx, *B.ctx))
        throw domain_error("points live over different group signatures");
}

Rat ratio_at(const MarkedGraph& A, const MarkedGraph& B, const Word& w) {
    Rat la = translation_length(A, w);
    Rat lb = translation_length(B, w);
    if (la.is_zero()) throw domain_error("candidate is elliptic in the source");
    return lb / la;
}

}  // namespace

std::string shape_name(CandidateShape s) {
    switch (s) {
        case CandidateShape::SimpleLoop: return "simple-loop";
        case CandidateShape::FigureEight: return "figure-eight";
        case CandidateShape::Barbell: return "barbell";
        case CandidateShape::SinglyDegenerateBarbell: return "singly-degenerate-barbell";
        case CandidateShape::DoublyDegenerateBarbell: return "doubly-degenerate-barbell";
    }
    return "?";
}

std::vector<Candidate> enumerate_candidates(const MarkedGraph& X) {
    const G& g = X.g;
    const FreeProduct& ctx = *X.ctx;
    std::vector<Candidate> out;
    std::set<WordKey> seen;

    auto add = [&](CandidateShape shape, Path loop, std::vector<Token> letters) {
        Word w = cyclic_reduce(ctx, loop_reading(X, loop)).first;
        if (!w.is_hyperbolic(ctx))
            throw domain_error("candidate loop reads an elliptic class (invalid marking?)");
        if (!seen.insert(canonical_class_key(ctx, w)).second) return;
        out.push_back(Candidate{shape, std::move(w), std::move(loop), std::move(letters)});
    };

    std::vector<std::vector<int>> circles = embedded_circles(g);
    std::vector<std::set<int>> cverts;
    cverts.reserve(circles.size());
    for (const auto& c : circles) {
        auto vs = circle_vertices(g, c);
        cverts.emplace_back(vs.begin(), vs.end());
    }
    std::vector<int> labeled;
    for (int v = 0; v < g.num_vertices(); ++v)
        if (g.vertex(v).label > 0) labeled.push_back(v);
    auto letter_at = [&](int v) { return ctx.factor(g.vertex(v).label).sample_nontrivial(0); };

    // i) simple loops
    for (const auto& c : circles) add(CandidateShape::SimpleLoop, Path::of_edges(g, c), {});

    // ii) figure eights: two circles sharing exactly one vertex
    for (size_t i = 0; i < circles.size(); ++i)
        for (size_t j = i + 1; j < circles.size(); ++j) {
            std::vector<int> common;
            std::set_intersection(cverts[i].begin(), cverts[i].end(), cverts[j].begin(),
                                  cverts[j].end(), std::back_inserter(common));
            if (common.size() != 1) continue;
            int w = common.front();
            for (bool flip : {false, true}) {
                std::vector<int> c2 = flip ? reverse_cycle(circles[j]) : circles[j];
                Path loop = Path::of_edges(g, rotate_to(g, circles[i], w));
                push_oedges(loop, g, rotate_to(g, c2, w));
                add(CandidateShape::FigureEight, std::move(loop), {});
            }
        }

    // iii) barbells: two disjoint circles joined by an embedded arc
    for (size_t i = 0; i < circles.size(); ++i)
        for (size_t j = i + 1; j < circles.size(); ++j) {
            std::vector<int> common;
            std::set_intersection(cverts[i].begin(), cverts[i].end(), cverts[j].begin(),
                                  cverts[j].end(), std::back_inserter(common));
            if (!common.empty()) continue;
            std::set<int> forbid = cverts[i];
            forbid.insert(cverts[j].begin(), cverts[j].end());
            for (int u : cverts[i])
                for (int v : cverts[j])
                    for (const auto& arc : embedded_arcs(g, u, v, forbid))
                        for (bool flip : {false, true}) {
                            std::vector<int> c2 = flip ? reverse_cycle(circles[j]) : circles[j];
                            Path loop = Path::of_edges(g, rotate_to(g, circles[i], u));
                            push_oedges(loop, g, arc);
                            push_oedges(loop, g, rotate_to(g, c2, v));
                            push_reversed_oedges(loop, g, arc);
                            add(CandidateShape::Barbell, std::move(loop), {});
                        }
        }

    // iv) singly degenerate: a letter at a labeled vertex joined to a circle
    for (int x : labeled) {
        Token tok = letter_at(x);
        int gid = g.vertex(x).label;
        for (size_t i = 0; i < circles.size(); ++i)
            for (bool flip : {false, true}) {
                std::vector<int> c = flip ? reverse_cycle(circles[i]) : circles[i];
                if (cverts[i].count(x)) {
                    Path loop = Path::at_vertex(x);
                    loop.push_letter(g, gid, tok);
                    push_oedges(loop, g, rotate_to(g, c, x));
                    add(CandidateShape::SinglyDegenerateBarbell, std::move(loop), {tok});
                    continue;
                }
                std::set<int> forbid = cverts[i];
                forbid.insert(x);
                for (int u : cverts[i])
                    for (const auto& arc : embedded_arcs(g, x, u, forbid)) {
                        Path loop = Path::at_vertex(x);
                        loop.push_letter(g, gid, tok);
                        push_oedges(loop, g, arc);
                        push_oedges(loop, g, rotate_to(g, c, u));
                        push_reversed_oedges(loop, g, arc);
                        add(CandidateShape::SinglyDegenerateBarbell, std::move(loop), {tok});
                    }
            }
    }

    // v) doubly degenerate: letters at two labeled vertices joined by an arc
    for (size_t a = 0; a < labeled.size(); ++a)
        for (size_t b = a + 1; b < labeled.size(); ++b) {
            int x = labeled[a], y = labeled[b];
            Token tx = letter_at(x), ty = letter_at(y);
            for (const auto& arc : embedded_arcs(g, x, y, {x, y})) {
                Path loop = Path::at_vertex(x);
                loop.push_letter(g, g.vertex(x).label, tx);
                push_oedges(loop, g, arc);
                loop.push_letter(g, g.vertex(y).label, ty);
                push_reversed_oedges(loop, g, arc);
                add(CandidateShape::DoublyDegenerateBarbell, std::move(loop), {tx, ty});
            }
        }

    if (out.empty()) throw domain_error("no candidates: the graph carries no hyperbolic class");
    return out;
}

std::pair<Word, Rat> shortest_hyperbolic(const MarkedGraph& X) {
    std::vector<Candidate> cs = enumerate_candidates(X);
    const Candidate* best = nullptr;
    Rat len;
    for (const Candidate& c : cs) {
        Rat l = translation_length(X, c.word);
        if (!best || l < len) {
            best = &c;
            len = l;
        }
    }
    return {best->word, len};
}

Stretch stretch_right(const MarkedGraph& A, const MarkedGraph& B) {
    check_signatures(A, B);
    std::vector<Candidate> cs = enumerate_candidates(A);
    const Candidate* best = nullptr;
    Rat factor;
    for (const Candidate& c : cs) {
        Rat r = ratio_at(A, B, c.word);
        if (!best || r > factor) {
            best = &c;
            factor = r;
        }
    }
    return {factor, *best};
}

Stretch stretch_left(const MarkedGraph& A, const MarkedGraph& B) { return stretch_right(B, A); }

Distance distance(const MarkedGraph& A, const MarkedGraph& B) {
    Distance d;
    d.right = stretch_right(A, B);
    d.left = stretch_left(A, B);
    d.lambda = d.right.factor * d.left.factor;
    d.log_value = std::log(d.lambda.to_double());
    return d;
}

Rat brute_force_stretch(const MarkedGraph& A, const MarkedGraph& B, int syllable_budget) {
    check_signatures(A, B);
    if (syllable_budget < 1) throw domain_error("syllable budget must be positive");
    if (syllable_budget > 12) throw domain_error("syllable budget too large for brute force");
    const FreeProduct& ctx = *A.ctx;

    bool all_finite = true;
    for (int gid = 1; gid <= ctx.p(); ++gid)
        if (!ctx.factor(gid).enumerate_nontrivial()) all_finite = false;

    std::vector<Word> pool;
    if (all_finite) {
        pool = enumerate_words(ctx, syllable_budget);
    } else {
        // Sampled alphabet for infinite vertex groups.
        std::vector<Syllable> alphabet;
        for (int j = 0; j < ctx.k(); ++j) {
            alphabet.push_back(Syllable::free_letter(j, 1));
            alphabet.push_back(Syllable::free_letter(j, -1));
        }
        for (int gid = 1; gid <= ctx.p(); ++gid) {
            const GroupOracle& gi = ctx.factor(gid);
            auto all = gi.enumerate_nontrivial();
            std::set<Token> toks;
            if (all)
                toks.insert(all->begin(), all->end());
            else
                for (uint64_t s = 0; s < 3; ++s) toks.insert(gi.sample_nontrivial(s));
            for (Token t : toks) alphabet.push_back(Syllable::vertex_letter(gid, t));
        }
        std::vector<std::vector<Syllable>> frontier = {{}};
        for (int len = 1; len <= syllable_budget; ++len) {
            std::vector<std::vector<Syllable>> next;
            for (const auto& w : frontier)
                for (const Syllable& s : alphabet) {
                    if (!w.empty()) {
                        const Syllable& top = w.back();
                        if (s.gid == 0 && top.gid == 0 && top.gen == s.gen && top.exp == -s.exp)
                            continue;
                        if (s.gid > 0 && top.gid == s.gid) continue;
                    }
                    auto e = w;
                    e.push_back(s);
                    next.push_back(std::move(e));
                }
            for (const auto& w : next) pool.push_back(Word(ctx, w));
            frontier = std::move(next);
        }
    }

    // One representative per conjugacy class (up to inversion, which does not
    // change translation lengths): keep cyclically reduced canonical forms.
    std::set<WordKey> seen;
    Rat best;
    bool found = false;
    for (const Word& w : pool) {
        if (!w.is_hyperbolic(ctx)) continue;
        Word core = cyclic_reduce(ctx, w).first;
        if (core.size() != w.size()) continue;
        if (!seen.insert(canonical_class_key(ctx, core)).second) continue;
        Rat r = ratio_at(A, B, core);
        if (!found || r > best) {
            best = r;
            found = true;
        }
    }
    if (!found) throw domain_error("no hyperbolic word within the syllable budget");
    return best;
}

Rat displacement(const MarkedGraph& X, const Automorphism& phi) {
    if (!same_signature(*X.ctx, phi.ctx()))
        throw domain_error("automorphism signature does not match the point");
    Rat best;
    bool found = false;
    for (const Candidate& c : enumerate_candidates(X)) {
        Word img = phi.apply(c.word);
        Rat la = translation_length(X, c.word);
        Rat lb = translation_length(X, img);
        if (lb.is_zero()) throw domain_error("automorphism sends a hyperbolic class to an elliptic one");
        Rat r = lb / la;
        if (!found || r > best) {
            best = r;
            found = true;
        }
    }
    return best;
}

MarkedGraph twisted(const MarkedGraph& X, const Automorphism& phi, const Automorphism& phi_inv) {
    if (!same_signature(*X.ctx, phi.ctx()))
        throw domain_error("automorphism signature does not match the point");
    if (!verify_inverse_pair(phi, phi_inv))
        throw domain_error("twisted requires a verified inverse pair");
    const FreeProduct& ctx = *X.ctx;
    const G& g = X.g;
    const Automorphism& psi = phi_inv;

    MarkedGraph Y(X.ctx);
    for (int v = 0; v < g.num_vertices(); ++v) {
        int label = g.vertex(v).label;
        Y.g.add_vertex(g.vertex(v).name, label > 0 ? psi.target(label) : 0);
    }
    for (int e = 0; e < g.num_edges(); ++e)
        Y.g.add_edge(g.edge(e).name, g.edge(e).from, g.edge(e).to, g.edge(e).len);
    Y.basepoint = X.basepoint;
    Y.tree_edges = X.tree_edges;

    // Letters move with the factor permutation and letter actions of psi.
    auto carry = [&](const Path& p) {
        Path q = Path::at_point(p.start());
        for (const PathAtom& atom : p.atoms()) {
            if (const Seg* s = std::get_if<Seg>(&atom)) {
                q.push_seg(*s);
            } else {
                const PathLetter& l = std::get<PathLetter>(atom);
                q.push_letter(Y.g, psi.target(l.gid),
                              psi.action(l.gid).letters.apply(ctx, l.token));
            }
        }
        return q;
    };

    Y.edge_words.reserve(X.edge_words.size());
    for (const Word& w : X.edge_words) Y.edge_words.push_back(psi.apply(w));
    Y.factor_paths.resize(ctx.p());
    Y.factor_words.resize(ctx.p());
    for (int gid = 1; gid <= ctx.p(); ++gid) {
        int tgt = psi.target(gid);
        Y.factor_paths[tgt - 1] = carry(X.factor_paths[gid - 1]);
        Y.factor_words[tgt - 1] =
            multiply(ctx, psi.apply(X.factor_words[gid - 1]), psi.action(gid).conj);
    }
    for (int j = 0; j < ctx.k(); ++j)
        Y.gen_loops.push_back(carry(word_to_path(X, phi.apply(Word::free_gen(j)))));

    // Restore the basepoint convention if the permutation moved label 1 off
    // a labeled basepoint.
    if (Y.g.vertex(Y.basepoint).label > 1) Y = rebased(Y, Y.g.labeled_vertex(1));

    auto issues = validate(Y);
    if (!issues.empty())
        throw domain_error("twisted marking failed validation: " + issues.front());
    return Y;
}

bool same_signature(const FreeProduct& a, const FreeProduct& b) {
    if (a.p() != b.p() || a.k() != b.k()) return false;
    for (int gid = 1; gid <= a.p(); ++gid) {
        auto x = a.factor(gid).enumerate_nontrivial();
        auto y = b.factor(gid).enumerate_nontrivial();
        if (x.has_value() != y.has_value()) return false;
        if (x && x->size() != y->size()) return false;
    }
    return true;
}

bool equal_candidate_lengths(const MarkedGraph& A, const MarkedGraph& B) {
    check_signatures(A, B);
    for (const MarkedGraph* X : {&A, &B})
        for (const Candidate& c : enumerate_candidates(*X))
            if (translation_length(A, c.word) != translation_length(B, c.word)) return false;
    return true;
}

}  // namespace fpo
