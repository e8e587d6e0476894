#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fpo {

// Opaque vertex-group element handle. Interpretation is oracle-specific
// (index into a multiplication table, or an integer for the cyclic group Z).
using Token = int64_t;

// Errors raised by group/word/graph operations on invalid input.
// The CLI maps these to exit code 1 ("domain error").
class domain_error : public std::runtime_error {
public:
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// A vertex group presented operationally: the artifact never inspects group
// structure beyond these operations.
class GroupOracle {
public:
    virtual ~GroupOracle() = default;

    virtual Token identity() const = 0;
    virtual bool valid(Token t) const = 0;
    virtual Token multiply(Token a, Token b) const = 0;
    virtual Token invert(Token a) const = 0;
    // Deterministic in the seed; never returns the identity.
    virtual Token sample_nontrivial(uint64_t seed) const = 0;
    // All nontrivial elements, or nullopt for infinite groups.
    virtual std::optional<std::vector<Token>> enumerate_nontrivial() const = 0;
    virtual std::string describe() const = 0;

    bool is_identity(Token t) const { return t == identity(); }
    bool commutes_with_all(Token t) const;
};

// Finite group given by a full multiplication table. table[a][b] = a*b with
// elements 0..n-1; the constructor locates the identity and checks the group
// axioms (closure, identity, inverses, associativity).
class FiniteTableGroup : public GroupOracle {
public:
    explicit FiniteTableGroup(std::vector<std::vector<Token>> table);

    // Convenience: the cyclic group Z/n.
    static std::shared_ptr<const FiniteTableGroup> cyclic(int n);

    Token identity() const override { return id_; }
    bool valid(Token t) const override { return t >= 0 && t < (Token)table_.size(); }
    Token multiply(Token a, Token b) const override;
    Token invert(Token a) const override;
    Token sample_nontrivial(uint64_t seed) const override;
    std::optional<std::vector<Token>> enumerate_nontrivial() const override;
    std::string describe() const override;

    size_t order() const { return table_.size(); }
    const std::vector<std::vector<Token>>& table() const { return table_; }

private:
    std::vector<std::vector<Token>> table_;
    Token id_ = 0;
    std::vector<Token> inv_;
};

// Infinite cyclic group; tokens are exponents.
class IntCyclicGroup : public GroupOracle {
public:
    Token identity() const override { return 0; }
    bool valid(Token) const override { return true; }
    Token multiply(Token a, Token b) const override { return a + b; }
    Token invert(Token a) const override { return -a; }
    Token sample_nontrivial(uint64_t seed) const override { return seed % 2 ? -1 : 1; }
    std::optional<std::vector<Token>> enumerate_nontrivial() const override { return std::nullopt; }
    std::string describe() const override { return "Z"; }
};

// The free product signature G = G_1 * ... * G_p * F_k. Factor ids are
// 1-based in all public data; index 0 of `factors` holds G_1.
class FreeProduct {
public:
    FreeProduct(std::vector<std::shared_ptr<const GroupOracle>> factors, int free_rank);

    int p() const { return (int)factors_.size(); }
    int k() const { return free_rank_; }
    const GroupOracle& factor(int gid) const;  // gid in 1..p
    std::shared_ptr<const GroupOracle> factor_ptr(int gid) const;

    // Display name of free generator j in 0..k-1: a, b, c, then a4, a5, ...
    std::string gen_name(int j) const;

private:
    std::vector<std::shared_ptr<const GroupOracle>> factors_;
    int free_rank_;
};

}  // namespace fpo
