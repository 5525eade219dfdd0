#pragma once
// Dense-timed pushdown automata: semantics, simplification, stack untiming, register translation.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpda/constraint.hpp"
#include "tpda/search.hpp"
#include "tpda/trpda.hpp"

namespace tpda {

// ── Model ──

/// x - y op k, or x op k when y is empty; "z" names the age of the stack symbol
struct DtAtom {
    std::string x, y;
    RelOp op = RelOp::Le;
    Int k = 0;
    bool operator<(const DtAtom& o) const;
    bool operator==(const DtAtom& o) const { return x == o.x && y == o.y && op == o.op && k == o.k; }
    std::string str() const;
};

using DtConstraint = std::vector<DtAtom>;  // conjunction, empty = true

std::string constraint_str(const DtConstraint& c);

struct DtOp {
    enum Kind { Nop, Push, Pop } kind = Nop;
    std::string sym;
    DtConstraint psi;  // push: over z only; pop: over clocks and z
};

struct DtRule {
    std::string from, to;
    std::optional<std::string> input;
    DtConstraint guard;
    std::vector<std::string> reset;
    DtOp op;
};

struct DtPDA {
    std::vector<std::string> clocks, locs, inputs, stack;
    std::string init;
    std::set<std::string> final;
    std::vector<DtRule> rules;
    bool uninitialized = false;  // clocks start with arbitrary values

    bool timeless_stack() const;
    Int max_constant() const;
    void check() const;
};

struct NonMonotonicWord : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

DtPDA parse_dtpda(const std::string& text);
std::string print_dtpda(const DtPDA& a);

// ── Semantics ──

/// exact register encoding with a timed stack; the first letter is a `~start` marker
TrPDA dt_exact_trpda(const DtPDA& a);
Tri dt_accepts(const DtPDA& a, const TimedWord& w, std::size_t max_silent = 0, AcceptStats* stats = nullptr);
/// accepted words of length <= max_len found by randomized bounded search
std::vector<TimedWord> dt_sample_words(const DtPDA& a, std::size_t count, std::size_t max_len, std::uint64_t seed,
                                       std::size_t max_steps = 16);

// ── Transformations ──

DtPDA simplify(const DtPDA& a);
bool is_simplified(const DtPDA& a);
DtPDA untime_stack(const DtPDA& a);
DtPDA uninitialized_wrapper(const DtPDA& a);
TrPDA dtpda_to_trpda(const DtPDA& a);

} // namespace tpda
