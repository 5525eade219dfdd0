#pragma once
// Timed-register pushdown automata, grammars, and the Minsky encoder.

#include <optional>
#include <string>
#include <vector>

#include "tpda/definable.hpp"

namespace tpda {

// ── Model ──

/// one relation entry; guard variables: from, pops (top first), input, to, pushes (top last)
struct Rule {
    std::string from;
    std::vector<std::string> pop;
    std::optional<std::string> input;  // nullopt = epsilon
    std::string to;
    std::vector<std::string> push;
    ZoneDNF guard;
    std::string name;
};

struct TrPDA {
    DefinableSet states, input, stack;
    DefinableSet initial, final;
    std::vector<Rule> rules;

    std::size_t rule_dim(const Rule& r) const;
    /// offsets of the guard blocks: from, each pop, input, to, each push, end
    std::vector<std::size_t> rule_offsets(const Rule& r) const;
    /// guard conjoined with the constraints of every component
    ZoneDNF effective_guard(const Rule& r) const;
    /// throws DimensionMismatch / invalid_argument on malformed entries
    void check() const;
    bool is_short_form() const;
};

using TimedWord = std::vector<Element>;

struct ClassificationReport {
    std::optional<Int> states_bound, input_bound, stack_bound;
    bool timeless_stack = false;
    bool orbit_finite_class = false;
    std::vector<std::string> certificates;
    std::string str() const;
};

ClassificationReport validate(const TrPDA& a);
TrPDA to_short_form(const TrPDA& a);

// ── Grammars ──

struct Production {
    std::string lhs;
    std::optional<std::string> input;
    std::vector<std::string> rhs;
    ZoneDNF guard;  // variables: lhs, input, rhs symbols in order
};

struct TrCFG {
    DefinableSet symbols, alphabet;
    std::string start;  // a location of symbols; every element of it is a start symbol
    std::vector<Production> productions;
};

/// one-state pushdown encoding with a bottom marker
TrPDA trcfg_to_trpda(const TrCFG& g);

struct UntimedCFG {
    std::vector<std::string> nonterminals;  // printable names
    std::vector<std::string> terminals;
    /// lhs nonterminal, terminal (-1 = epsilon), rhs nonterminals
    struct Prod {
        int lhs;
        int terminal;
        std::vector<int> rhs;
    };
    std::vector<Prod> prods;
    std::vector<int> start;
    /// productive start symbol exists
    bool nonempty() const;
    std::string str() const;
};

UntimedCFG trcfg_untiming(const TrCFG& g);

// ── Minsky machines ──

struct MinskyInstr {
    enum Op { Inc1, Inc2, Dec1, Dec2, Jz1, Jz2, Goto, Halt } op;
    int target = -1;
};

using MinskyMachine = std::vector<MinskyInstr>;

MinskyMachine parse_minsky(const std::string& text);
TrPDA encode_minsky(const MinskyMachine& m);

} // namespace tpda
