#include "fpo/group.hpp"

#include <sstream>

namespace fpo {

bool GroupOracle::commutes_with_all(Token t) const {
    auto all = enumerate_nontrivial();
    if (!all) {
        // The only infinite oracle shipped is abelian; sample-check a few
        // elements to keep the interface honest.
        for (uint64_t s = 0; s < 8; ++s) {
            Token g = sample_nontrivial(s);
            if (multiply(t, g) != multiply(g, t)) return false;
        }
        return true;
    }
    for (Token g : *all)
        if (multiply(t, g) != multiply(g, t)) return false;
    return true;
}

FiniteTableGroup::FiniteTableGroup(std::vector<std::vector<Token>> table)
    : table_(std::move(table)) {
    const size_t n = table_.size();
    if (n == 0) throw domain_error("group table is empty");
    for (const auto& row : table_) {
        if (row.size() != n) throw domain_error("group table is not square");
        for (Token t : row)
            if (t < 0 || t >= (Token)n) throw domain_error("group table entry out of range");
    }
    // Locate the two-sided identity.
    Token id = -1;
    for (Token e = 0; e < (Token)n; ++e) {
        bool ok = true;
        for (Token a = 0; a < (Token)n && ok; ++a)
            ok = table_[e][a] == a && table_[a][e] == a;
        if (ok) { id = e; break; }
    }
    if (id < 0) throw domain_error("group table has no identity");
    id_ = id;
    // Inverses.
    inv_.assign(n, -1);
    for (Token a = 0; a < (Token)n; ++a) {
        for (Token b = 0; b < (Token)n; ++b) {
            if (table_[a][b] == id_ && table_[b][a] == id_) { inv_[a] = b; break; }
        }
        if (inv_[a] < 0) throw domain_error("group table element has no inverse");
    }
    // Associativity (tables here are tiny; cubic check is fine).
    for (Token a = 0; a < (Token)n; ++a)
        for (Token b = 0; b < (Token)n; ++b)
            for (Token c = 0; c < (Token)n; ++c)
                if (table_[table_[a][b]][c] != table_[a][table_[b][c]])
                    throw domain_error("group table is not associative");
    if (n == 1) throw domain_error("trivial vertex groups are not allowed");
}

std::shared_ptr<const FiniteTableGroup> FiniteTableGroup::cyclic(int n) {
    if (n < 2) throw domain_error("cyclic(n) needs n >= 2");
    std::vector<std::vector<Token>> t(n, std::vector<Token>(n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) t[a][b] = (a + b) % n;
    return std::make_shared<const FiniteTableGroup>(std::move(t));
}

Token FiniteTableGroup::multiply(Token a, Token b) const {
    if (!valid(a) || !valid(b)) throw domain_error("token out of range in multiply");
    return table_[a][b];
}

Token FiniteTableGroup::invert(Token a) const {
    if (!valid(a)) throw domain_error("token out of range in invert");
    return inv_[a];
}

Token FiniteTableGroup::sample_nontrivial(uint64_t seed) const {
    const size_t n = table_.size();
    Token t = (Token)(seed % (n - 1));
    if (t >= id_) ++t;  // skip the identity slot
    return t;
}

std::optional<std::vector<Token>> FiniteTableGroup::enumerate_nontrivial() const {
    std::vector<Token> out;
    for (Token a = 0; a < (Token)table_.size(); ++a)
        if (a != id_) out.push_back(a);
    return out;
}

std::string FiniteTableGroup::describe() const {
    std::ostringstream os;
    os << "finite group of order " << table_.size();
    return os.str();
}

FreeProduct::FreeProduct(std::vector<std::shared_ptr<const GroupOracle>> factors, int free_rank)
    : factors_(std::move(factors)), free_rank_(free_rank) {
    if (free_rank_ < 0) throw domain_error("free rank must be nonnegative");
    for (const auto& f : factors_)
        if (!f) throw domain_error("null group oracle");
    const int p = (int)factors_.size();
    if (p + free_rank_ < 1) throw domain_error("the trivial free product is not allowed");
    if (p == 1 && free_rank_ == 0)
        throw domain_error("G = G_1 with no free part admits no graph-of-groups decomposition of interest");
    if (p == 0 && free_rank_ == 1)
        throw domain_error("G = Z carries no valid marked graphs (every rose vertex would be redundant)");
}

const GroupOracle& FreeProduct::factor(int gid) const {
    if (gid < 1 || gid > p()) throw domain_error("factor id out of range");
    return *factors_[gid - 1];
}

std::shared_ptr<const GroupOracle> FreeProduct::factor_ptr(int gid) const {
    if (gid < 1 || gid > p()) throw domain_error("factor id out of range");
    return factors_[gid - 1];
}

std::string FreeProduct::gen_name(int j) const {
    if (j < 0 || j >= free_rank_) throw domain_error("free generator index out of range");
    if (j < 3 && free_rank_ <= 3) return std::string(1, (char)('a' + j));
    if (j < 3) return std::string(1, (char)('a' + j));
    std::ostringstream os;
    os << 'a' << (j + 1);
    return os.str();
}

}  // namespace fpo
