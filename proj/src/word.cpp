#include "fpo/word.hpp"

#include <random>
#include <sstream>

namespace fpo {

namespace {

void check_syllable(const FreeProduct& ctx, const Syllable& s) {
    if (s.gid == 0) {
        if (s.gen < 0 || s.gen >= ctx.k()) throw domain_error("free generator index out of range");
        if (s.exp != 1 && s.exp != -1) throw domain_error("free letter exponent must be +/-1");
    } else {
        const GroupOracle& g = ctx.factor(s.gid);
        if (!g.valid(s.token)) throw domain_error("vertex letter token out of range");
    }
}

// Push one syllable onto a normalized stack, merging/cancelling as needed.
void push_normalized(const FreeProduct& ctx, std::vector<Syllable>& out, const Syllable& s) {
    if (s.gid > 0 && ctx.factor(s.gid).is_identity(s.token)) return;
    if (!out.empty()) {
        Syllable& top = out.back();
        if (s.gid == 0 && top.gid == 0 && top.gen == s.gen && top.exp == -s.exp) {
            out.pop_back();
            return;
        }
        if (s.gid > 0 && top.gid == s.gid) {
            const GroupOracle& g = ctx.factor(s.gid);
            Token prod = g.multiply(top.token, s.token);
            out.pop_back();
            if (!g.is_identity(prod)) push_normalized(ctx, out, Syllable::vertex_letter(s.gid, prod));
            return;
        }
    }
    out.push_back(s);
}

}  // namespace

Word::Word(const FreeProduct& ctx, std::vector<Syllable> syllables) {
    syl_.reserve(syllables.size());
    for (const Syllable& s : syllables) {
        check_syllable(ctx, s);
        push_normalized(ctx, syl_, s);
    }
}

Word Word::free_gen(int gen, int exp) {
    Word w;
    w.syl_.push_back(Syllable::free_letter(gen, exp));
    return w;
}

Word Word::vertex(const FreeProduct& ctx, int gid, Token token) {
    Word w;
    Syllable s = Syllable::vertex_letter(gid, token);
    check_syllable(ctx, s);
    if (!ctx.factor(gid).is_identity(token)) w.syl_.push_back(s);
    return w;
}

bool Word::is_hyperbolic(const FreeProduct& ctx) const {
    Word core = cyclic_reduce(ctx, *this).first;
    if (core.size() >= 2) return true;
    if (core.size() == 1) return core.syllables()[0].is_free();
    return false;
}

Word multiply(const FreeProduct& ctx, const Word& a, const Word& b) {
    Word out;
    out.syl_ = a.syl_;
    for (const Syllable& s : b.syl_) push_normalized(ctx, out.syl_, s);
    return out;
}

Word invert(const FreeProduct& ctx, const Word& a) {
    Word out;
    out.syl_.reserve(a.syl_.size());
    for (auto it = a.syl_.rbegin(); it != a.syl_.rend(); ++it) {
        Syllable s = *it;
        if (s.gid == 0)
            s.exp = -s.exp;
        else
            s.token = ctx.factor(s.gid).invert(s.token);
        out.syl_.push_back(s);
    }
    return out;
}

Word conjugate(const FreeProduct& ctx, const Word& u, const Word& g) {
    return multiply(ctx, multiply(ctx, g, u), invert(ctx, g));
}

std::pair<Word, Word> cyclic_reduce(const FreeProduct& ctx, const Word& u) {
    std::vector<Syllable> core = u.syllables();
    std::vector<Syllable> conj;  // prefix syllables stripped so far, in order
    while (core.size() >= 2) {
        const Syllable& x = core.front();
        const Syllable& y = core.back();
        if (x.gid == 0 && y.gid == 0 && x.gen == y.gen && x.exp == -y.exp) {
            conj.push_back(x);
            core.erase(core.begin());
            core.pop_back();
            continue;
        }
        if (x.gid > 0 && y.gid > 0 && x.gid == y.gid) {
            // u = x m y with x,y in G_i: u = x (m (y x)) x^-1.
            const GroupOracle& g = ctx.factor(x.gid);
            Token merged = g.multiply(y.token, x.token);
            conj.push_back(x);
            core.erase(core.begin());
            core.pop_back();
            if (!g.is_identity(merged)) {
                // The preceding syllable cannot be in G_i (normal form), so
                // appending keeps the interior reduced.
                core.push_back(Syllable::vertex_letter(x.gid, merged));
            }
            continue;
        }
        break;
    }
    return {Word(ctx, std::move(core)), Word(ctx, std::move(conj))};
}

Word random_word(const FreeProduct& ctx, uint64_t seed, int length) {
    std::mt19937_64 rng(seed);
    const int p = ctx.p();
    const int k = ctx.k();
    std::vector<Syllable> syl;
    syl.reserve((size_t)length);
    for (int i = 0; i < length; ++i) {
        // Choose among 2k free letters and p vertex-group slots.
        uint64_t choice = rng() % (uint64_t)(2 * k + p);
        if ((int)choice < 2 * k) {
            int gen = (int)(choice / 2);
            int exp = (choice % 2) ? -1 : 1;
            syl.push_back(Syllable::free_letter(gen, exp));
        } else {
            int gid = (int)(choice - 2 * k) + 1;
            Token t = ctx.factor(gid).sample_nontrivial(rng());
            syl.push_back(Syllable::vertex_letter(gid, t));
        }
    }
    return Word(ctx, std::move(syl));
}

std::string Word::str(const FreeProduct& ctx) const {
    if (syl_.empty()) return "1";
    std::ostringstream os;
    bool first = true;
    for (const Syllable& s : syl_) {
        if (!first) os << ' ';
        first = false;
        if (s.gid == 0) {
            os << ctx.gen_name(s.gen);
            if (s.exp < 0) os << "^-1";
        } else {
            os << 'v' << s.gid << ':' << s.token;
        }
    }
    return os.str();
}

Word parse_word(const FreeProduct& ctx, const std::string& text) {
    std::istringstream is(text);
    std::string piece;
    std::vector<Syllable> syl;
    while (is >> piece) {
        if (piece == "1") continue;
        if (piece[0] == 'v') {
            auto colon = piece.find(':');
            if (colon == std::string::npos) throw domain_error("bad vertex letter: " + piece);
            int gid = std::stoi(piece.substr(1, colon - 1));
            Token tok = std::stoll(piece.substr(colon + 1));
            syl.push_back(Syllable::vertex_letter(gid, tok));
            continue;
        }
        int exp = 1;
        std::string name = piece;
        auto caret = piece.find('^');
        if (caret != std::string::npos) {
            name = piece.substr(0, caret);
            exp = std::stoi(piece.substr(caret + 1));
            if (exp != 1 && exp != -1) throw domain_error("exponent must be +/-1: " + piece);
        }
        int gen = -1;
        for (int j = 0; j < ctx.k(); ++j)
            if (ctx.gen_name(j) == name) { gen = j; break; }
        if (gen < 0) throw domain_error("unknown free generator: " + name);
        syl.push_back(Syllable::free_letter(gen, exp));
    }
    return Word(ctx, std::move(syl));
}

std::vector<Word> enumerate_words(const FreeProduct& ctx, int max_syllables) {
    // Collect the admissible syllables once.
    std::vector<Syllable> alphabet;
    for (int j = 0; j < ctx.k(); ++j) {
        alphabet.push_back(Syllable::free_letter(j, 1));
        alphabet.push_back(Syllable::free_letter(j, -1));
    }
    for (int gid = 1; gid <= ctx.p(); ++gid) {
        auto all = ctx.factor(gid).enumerate_nontrivial();
        if (!all) throw domain_error("enumerate_words needs finite vertex groups");
        for (Token t : *all) alphabet.push_back(Syllable::vertex_letter(gid, t));
    }
    std::vector<Word> out;
    out.push_back(Word::identity());
    // Breadth-first over normal forms: extend only by syllables that keep the
    // word in normal form, so each word appears exactly once.
    std::vector<std::vector<Syllable>> frontier = {{}};
    for (int len = 1; len <= max_syllables; ++len) {
        std::vector<std::vector<Syllable>> next;
        for (const auto& w : frontier) {
            for (const Syllable& s : alphabet) {
                if (!w.empty()) {
                    const Syllable& top = w.back();
                    if (s.gid == 0 && top.gid == 0 && top.gen == s.gen && top.exp == -s.exp) continue;
                    if (s.gid > 0 && top.gid == s.gid) continue;
                }
                auto extended = w;
                extended.push_back(s);
                next.push_back(extended);
            }
        }
        for (auto& w : next) {
            Word word;
            word = Word(ctx, w);
            out.push_back(std::move(word));
        }
        frontier = std::move(next);
    }
    return out;
}

bool conjugate_words(const FreeProduct& ctx, const Word& u, const Word& v) {
    Word cu = cyclic_reduce(ctx, u).first;
    Word cv = cyclic_reduce(ctx, v).first;
    size_t n = cu.syllables().size();
    if (n != cv.syllables().size()) return false;
    if (n == 0) return true;
    if (n == 1) {
        const Syllable& a = cu.syllables()[0];
        const Syllable& b = cv.syllables()[0];
        if (a.gid != b.gid) return false;
        if (a.gid == 0) return a == b;
        if (a.token == b.token) return true;
        const GroupOracle& gi = ctx.factor(a.gid);
        if (auto all = gi.enumerate_nontrivial()) {
            for (Token t : *all)
                if (gi.multiply(gi.multiply(t, a.token), gi.invert(t)) == b.token) return true;
        }
        return false;  // infinite cyclic factors are abelian
    }
    for (size_t r = 0; r < n; ++r) {
        bool ok = true;
        for (size_t i = 0; i < n && ok; ++i) ok = cu.syllables()[(i + r) % n] == cv.syllables()[i];
        if (ok) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Automorphisms
// ---------------------------------------------------------------------------

namespace {

// Order of a finite factor, or nullopt for infinite cyclic ones.
std::optional<size_t> factor_order(const FreeProduct& ctx, int gid) {
    auto all = ctx.factor(gid).enumerate_nontrivial();
    if (!all) return std::nullopt;
    return all->size() + 1;
}

}  // namespace

Token TokenMap::apply(const FreeProduct& ctx, Token t) const {
    if (!ctx.factor(src).valid(t)) throw domain_error("token map applied to an invalid token");
    if (!table.empty()) {
        if (t < 0 || t >= static_cast<Token>(table.size()))
            throw domain_error("token map table does not cover the factor");
        return table[static_cast<size_t>(t)];
    }
    return z_power >= 0 ? t : -t;
}

bool TokenMap::is_identity() const {
    if (src != dst) return false;
    if (table.empty()) return z_power == 1;
    for (size_t i = 0; i < table.size(); ++i)
        if (table[i] != static_cast<Token>(i)) return false;
    return true;
}

TokenMap identity_token_map(const FreeProduct& ctx, int gid) {
    TokenMap m;
    m.src = m.dst = gid;
    if (auto n = factor_order(ctx, gid)) {
        m.table.resize(*n);
        for (size_t i = 0; i < *n; ++i) m.table[i] = static_cast<Token>(i);
    }
    return m;
}

TokenMap compose(const FreeProduct& ctx, const TokenMap& f, const TokenMap& g) {
    if (g.dst != f.src) throw domain_error("token maps do not chain");
    TokenMap out;
    out.src = g.src;
    out.dst = f.dst;
    if (!g.table.empty()) {
        out.table.resize(g.table.size());
        for (size_t t = 0; t < g.table.size(); ++t)
            out.table[t] = f.apply(ctx, g.table[t]);
    } else {
        if (!f.table.empty()) throw domain_error("token maps mix finite and infinite factors");
        out.z_power = f.z_power * g.z_power;
    }
    return out;
}

TokenMap invert(const FreeProduct& ctx, const TokenMap& f) {
    TokenMap out;
    out.src = f.dst;
    out.dst = f.src;
    if (!f.table.empty()) {
        out.table.assign(f.table.size(), -1);
        for (size_t t = 0; t < f.table.size(); ++t) {
            Token img = f.table[t];
            if (img < 0 || img >= static_cast<Token>(f.table.size()) || out.table[static_cast<size_t>(img)] != -1)
                throw domain_error("token map is not a bijection");
            out.table[static_cast<size_t>(img)] = static_cast<Token>(t);
        }
    } else {
        out.z_power = f.z_power;
    }
    (void)ctx;
    return out;
}

std::vector<std::string> check_token_map(const FreeProduct& ctx, const TokenMap& m) {
    std::vector<std::string> issues;
    if (m.src < 1 || m.src > ctx.p() || m.dst < 1 || m.dst > ctx.p()) {
        issues.push_back("token map factor ids out of range");
        return issues;
    }
    const GroupOracle& s = ctx.factor(m.src);
    const GroupOracle& d = ctx.factor(m.dst);
    auto ns = factor_order(ctx, m.src);
    auto nd = factor_order(ctx, m.dst);
    if (ns.has_value() != nd.has_value()) {
        issues.push_back("token map relates a finite and an infinite factor");
        return issues;
    }
    if (!ns) {
        if (!m.table.empty()) issues.push_back("infinite cyclic factors take no token table");
        if (m.z_power != 1 && m.z_power != -1)
            issues.push_back("infinite cyclic letter action must be t -> t or t -> -t");
        return issues;
    }
    if (*ns != *nd) {
        issues.push_back("factors have different orders");
        return issues;
    }
    if (m.table.size() != *ns) {
        issues.push_back("token table size differs from the factor order");
        return issues;
    }
    // The table is addressed by token, so tokens must be exactly 0..n-1.
    for (Token t = 0; t < static_cast<Token>(*ns); ++t) {
        if (!s.valid(t) || !d.valid(t)) {
            issues.push_back("factor tokens are not dense indices");
            return issues;
        }
    }
    std::vector<bool> hit(*ns, false);
    for (size_t t = 0; t < *ns; ++t) {
        Token img = m.table[t];
        if (img < 0 || img >= static_cast<Token>(*ns)) {
            issues.push_back("token table entry out of range");
            return issues;
        }
        if (hit[static_cast<size_t>(img)]) issues.push_back("token table is not injective");
        hit[static_cast<size_t>(img)] = true;
    }
    if (m.table[static_cast<size_t>(s.identity())] != d.identity())
        issues.push_back("token table does not fix the identity");
    for (Token a = 0; a < static_cast<Token>(*ns); ++a)
        for (Token b = 0; b < static_cast<Token>(*ns); ++b)
            if (m.table[static_cast<size_t>(s.multiply(a, b))] !=
                d.multiply(m.table[static_cast<size_t>(a)], m.table[static_cast<size_t>(b)]))
                issues.push_back("token table is not a homomorphism");
    return issues;
}

Automorphism::Automorphism(std::shared_ptr<const FreeProduct> ctx, std::vector<Word> gen_images,
                           std::vector<FactorAction> actions)
    : ctx_(std::move(ctx)), gen_images_(std::move(gen_images)), actions_(std::move(actions)) {
    if (!ctx_) throw domain_error("automorphism needs a context");
    if (static_cast<int>(gen_images_.size()) != ctx_->k())
        throw domain_error("automorphism: one image per free generator required");
    if (static_cast<int>(actions_.size()) != ctx_->p())
        throw domain_error("automorphism: one action per factor required");
    std::vector<bool> hit(static_cast<size_t>(ctx_->p()), false);
    for (int gid = 1; gid <= ctx_->p(); ++gid) {
        const FactorAction& act = actions_[static_cast<size_t>(gid - 1)];
        if (act.letters.src != gid)
            throw domain_error("automorphism: factor action indexed against the wrong source");
        auto issues = check_token_map(*ctx_, act.letters);
        if (!issues.empty()) throw domain_error("automorphism: " + issues.front());
        if (hit[static_cast<size_t>(act.letters.dst - 1)])
            throw domain_error("automorphism: factor targets are not a permutation");
        hit[static_cast<size_t>(act.letters.dst - 1)] = true;
    }
}

Automorphism Automorphism::identity(std::shared_ptr<const FreeProduct> ctx) {
    std::vector<Word> gens;
    for (int j = 0; j < ctx->k(); ++j) gens.push_back(Word::free_gen(j, 1));
    std::vector<FactorAction> actions;
    for (int gid = 1; gid <= ctx->p(); ++gid) {
        FactorAction a;
        a.letters = identity_token_map(*ctx, gid);
        actions.push_back(std::move(a));
    }
    return Automorphism(std::move(ctx), std::move(gens), std::move(actions));
}

Word Automorphism::apply(const Word& w) const {
    const FreeProduct& ctx = *ctx_;
    Word out;
    for (const Syllable& s : w.syllables()) {
        Word piece;
        if (s.is_free()) {
            piece = gen_images_.at(static_cast<size_t>(s.gen));
            if (s.exp < 0) piece = invert(ctx, piece);
        } else {
            const FactorAction& act = action(s.gid);
            piece = conjugate(ctx, Word::vertex(ctx, act.letters.dst, act.letters.apply(ctx, s.token)),
                              act.conj);
        }
        out = multiply(ctx, out, piece);
    }
    return out;
}

Automorphism compose(const Automorphism& f, const Automorphism& g) {
    if (&f.ctx() != &g.ctx()) throw domain_error("automorphisms over different contexts");
    const FreeProduct& ctx = f.ctx();
    std::vector<Word> gens;
    for (int j = 0; j < ctx.k(); ++j) gens.push_back(f.apply(g.gen_image(j)));
    std::vector<FactorAction> actions;
    for (int gid = 1; gid <= ctx.p(); ++gid) {
        const FactorAction& ag = g.action(gid);
        const FactorAction& af = f.action(ag.letters.dst);
        FactorAction c;
        c.conj = multiply(ctx, f.apply(ag.conj), af.conj);
        c.letters = compose(ctx, af.letters, ag.letters);
        actions.push_back(std::move(c));
    }
    return Automorphism(f.ctx_ptr(), std::move(gens), std::move(actions));
}

Automorphism power(const Automorphism& f, int n) {
    if (n < 0) throw domain_error("negative automorphism power (pass the inverse explicitly)");
    Automorphism out = Automorphism::identity(f.ctx_ptr());
    for (int i = 0; i < n; ++i) out = compose(f, out);
    return out;
}

bool verify_inverse_pair(const Automorphism& f, const Automorphism& g) {
    if (&f.ctx() != &g.ctx()) return false;
    const FreeProduct& ctx = f.ctx();
    auto is_inner_trivial = [&](const Automorphism& h) {
        for (int j = 0; j < ctx.k(); ++j)
            if (!(h.gen_image(j) == Word::free_gen(j, 1))) return false;
        for (int gid = 1; gid <= ctx.p(); ++gid) {
            std::vector<Token> letters;
            if (auto all = ctx.factor(gid).enumerate_nontrivial())
                letters = *all;
            else
                letters.push_back(1);
            for (Token t : letters) {
                Word x = Word::vertex(ctx, gid, t);
                if (!(h.apply(x) == x)) return false;
            }
        }
        return true;
    };
    return is_inner_trivial(compose(f, g)) && is_inner_trivial(compose(g, f));
}

}  // namespace fpo
