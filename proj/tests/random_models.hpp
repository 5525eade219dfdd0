#pragma once
// Random small automata and sets shared by the unit tests and the acceptance binary.

#include <random>
#include <string>

#include "tpda/constraint.hpp"
#include "tpda/trpda.hpp"

namespace tpda::testgen {

inline int pick(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline std::string var(std::size_t i) { return "x" + std::to_string(i + 1); }

/// x_i - x_j op k with small k
inline std::string random_atom(std::mt19937_64& rng, std::size_t d) {
    static const char* ops[] = {"<", "<=", "=", ">=", ">"};
    std::size_t i = pick(rng, 0, static_cast<int>(d) - 1), j = pick(rng, 0, static_cast<int>(d) - 1);
    int k = pick(rng, -2, 2);
    if (i == j) {
        if (d == 1) return "";
        j = (i + 1) % d;
    }
    return var(i) + " - " + var(j) + " " + ops[pick(rng, 0, 4)] + " " + std::to_string(k);
}

inline std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (auto& p : parts) {
        if (p.empty()) continue;
        if (!s.empty()) s += " & ";
        s += p;
    }
    return s.empty() ? "true" : s;
}

/// bounded location constraint over dim d
inline ZoneDNF random_state_constraint(std::mt19937_64& rng, std::size_t d) {
    if (d < 2) return ZoneDNF::top(d);
    int c = pick(rng, 0, 2);
    std::string s = pick(rng, 0, 2) == 0 ? "x2 - x1 = " + std::to_string(c)
                                         : "x1 <= x2 & x2 - x1 <= " + std::to_string(c + 1);
    return parse_constraint(s, d);
}

/// short-form automaton; timed_stack adds a one-register stack symbol tied to the state
inline TrPDA random_trpda(std::mt19937_64& rng, bool timed_stack, std::size_t max_dim = 2, int max_locs = 4) {
    for (;;) {
        TrPDA a;
        const int nl = pick(rng, 2, max_locs);
        std::vector<std::string> locs;
        for (int k = 0; k < nl; ++k) {
            std::string l = "q" + std::to_string(k);
            std::size_t d = pick(rng, 0, static_cast<int>(max_dim));
            a.states.add(l, d, random_state_constraint(rng, d));
            locs.push_back(l);
        }
        a.input.add("a", 0);
        a.input.add("b", 1);
        a.stack.add("s0", 0);
        a.stack.add("s1", 0);
        if (timed_stack) a.stack.add("t", 1);
        a.initial.add("q0", a.states.dim_of("q0"), a.states.find("q0")->constraint);
        std::string fin = locs[pick(rng, 1, nl - 1)];
        a.final.add(fin, a.states.dim_of(fin), a.states.find(fin)->constraint);
        const int nr = pick(rng, 3, 8);
        for (int k = 0; k < nr; ++k) {
            Rule r;
            r.from = locs[pick(rng, 0, nl - 1)];
            r.to = locs[pick(rng, 0, nl - 1)];
            int in = pick(rng, 0, 2);
            if (in == 1) r.input = "a";
            if (in == 2) r.input = "b";
            int kind = pick(rng, 0, 2);
            std::vector<std::string> syms = {"s0", "s1"};
            if (timed_stack) syms.push_back("t");
            std::string s = syms[pick(rng, 0, static_cast<int>(syms.size()) - 1)];
            if (kind == 1) r.push = {s};
            if (kind == 2) r.pop = {s};
            auto off = a.rule_offsets(r);
            const std::size_t d = off.back();
            std::vector<std::string> atoms;
            if (d > 0) {
                int na = pick(rng, 0, 3);
                for (int t = 0; t < na; ++t) atoms.push_back(random_atom(rng, d));
            }
            // a timed symbol stays near the state registers on its side
            if (s == "t" && kind != 0) {
                std::size_t sym = kind == 1 ? off[off.size() - 2] : off[1];
                std::size_t st = kind == 1 ? off[2 + r.pop.size()] : 0;
                std::size_t stdim = a.states.dim_of(kind == 1 ? r.to : r.from);
                if (stdim > 0) atoms.push_back(var(sym) + " - " + var(st) + " = " + std::to_string(pick(rng, -1, 1)));
            }
            r.guard = d == 0 ? ZoneDNF::top(0) : parse_constraint(join(atoms), d);
            r.name = "r" + std::to_string(k);
            a.rules.push_back(std::move(r));
        }
        if (validate(a).orbit_finite_class) return a;
    }
}

} // namespace tpda::testgen
