#pragma once
// Systems of inclusions over sets of integers and their solvers.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tpda/zone.hpp"

namespace tpda {

// ── Systems ──

struct Inclusion {
    enum Kind { Const, Inter, Add } kind;
    int x = -1, y = -1, z = -1;
    Int k = 0;  // Const only, in {-1, 0, 1}
};

struct EqSystem {
    std::vector<std::string> names;
    std::vector<Inclusion> incs;
    std::map<std::string, int> index;

    int var(const std::string& name);  // find or create
    std::optional<int> find(const std::string& name) const;
    void add_const(int x, Int k);
    void add_inter(int x, int y);
    void add_add(int x, int y, int z);
    /// x >= y, as y + {0}
    void add_copy(int x, int y);
    /// variable whose least solution is {m} / (-inf, m) / (m, inf) / all integers
    int gadget_eq(Int m);
    int gadget_lt(Int m);
    int gadget_gt(Int m);
    int gadget_all();
    bool intersection_free() const;
    std::string str() const;
};

/// parse the `.eq` format (sugar expanded into binary form)
EqSystem parse_eq(const std::string& text);

// ── Semilinear normal form ──

struct IntSetNF {
    std::set<Int> finite;
    std::set<std::pair<Int, Int>> right;   // a + pN
    std::set<std::pair<Int, Int>> left;    // a - pN
    std::set<std::pair<Int, Int>> cosets;  // a + gZ with 0 <= a < g

    static IntSetNF point(Int k);
    bool empty() const { return finite.empty() && right.empty() && left.empty() && cosets.empty(); }
    bool contains(Int k) const;
    void unite(const IntSetNF& o);
    void simplify();
    /// o is a subset of *this
    bool includes(const IntSetNF& o) const;
    std::optional<Int> some_element() const;
    std::size_t size() const { return finite.size() + right.size() + left.size() + cosets.size(); }
    std::string str() const;
    bool operator==(const IntSetNF& o) const {
        return finite == o.finite && right == o.right && left == o.left && cosets == o.cosets;
    }
};

IntSetNF nf_add(const IntSetNF& a, const IntSetNF& b);

// ── Solvers ──

enum class Verdict { True, False, Unknown };
std::string verdict_str(Verdict v);

bool nonempty_intersection_free(const EqSystem& s, int x);

struct KleeneResult {
    std::vector<IntSetNF> values;
    bool exact = false;
    std::size_t steps = 0;
};

KleeneResult kleene_solve(const EqSystem& s, std::size_t budget = 10000);

enum class Backend { Accel, Bounded };
Verdict membership(const EqSystem& s, int x, Int k, Backend b = Backend::Accel, std::size_t budget = 10000,
                   std::size_t depth = 12);

struct NonemptyStats {
    std::size_t seeded = 0;
    std::size_t unknown_checks = 0;
};
Verdict nonempty(const EqSystem& s, int x, std::size_t budget = 10000, NonemptyStats* stats = nullptr);

struct DerivationResult {
    std::set<Int> elements;  // derivable elements inside the window
    bool truncated = false;  // some derivable element fell outside the window
    bool nonempty = false;   // some element derivable at this depth
};

DerivationResult derivation_oracle(const EqSystem& s, int x, std::size_t depth, Int window = 4096);

} // namespace tpda
