#pragma once
// Emptiness of orbit-finite trPDA: reference-pointed orbits, shifts, equation systems, orbit graphs.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tpda/intsets.hpp"
#include "tpda/search.hpp"
#include "tpda/trpda.hpp"

namespace tpda {

// ── Preprocessing ──

inline const std::string kInitLoc = "~init";
inline const std::string kFinalLoc = "~fin";

/// one timed initial and final state, dummy registers, final pops everything, rules unlabeled
TrPDA preprocess(const TrPDA& a, bool normalize = true);

// ── Reference-pointed orbits ──

/// orbit of (v, t, v', t') with t = t' and min v <= t < min v + 1 (same for v')
struct RefOrbit {
    std::string l1, l2;
    std::size_t n1 = 0, n2 = 0;
    Orbit orbit;

    /// coordinates of v, t, v', t' inside `orbit`
    std::size_t t1() const { return n1; }
    std::size_t v2(std::size_t k) const { return n1 + 1 + k; }
    std::size_t t2() const { return n1 + 1 + n2; }
    /// orbit of (v, t) and of (v', t')
    Orbit left() const;
    Orbit right() const;
    bool diagonal() const;
    std::string str() const;
    bool operator<(const RefOrbit& o) const;
    bool operator==(const RefOrbit& o) const {
        return l1 == o.l1 && l2 == o.l2 && orbit == o.orbit;
    }
};

/// orbits of (v, t) with min v <= t < min v + 1, for one location
std::vector<Orbit> dot_orbits(const Location& l);
/// orbits of the reference-pointed pairs over one pair of locations
std::vector<RefOrbit> ref_orbits(const Location& l1, const Location& l2);
/// all pairs of locations
std::vector<RefOrbit> ref_orbits(const DefinableSet& Q);

/// orbit of (v, v' + z) for (v, t, v', t) in o
Orbit shift_image(const RefOrbit& o, Int z);

// ── Decomposition ──

struct IntervalZ {
    enum Kind { Below, Point, Above } kind = Point;
    Int m = 0;
    bool contains(Int z) const { return kind == Below ? z < m : kind == Above ? z > m : z == m; }
    std::string str() const;
    bool operator<(const IntervalZ& o) const { return kind != o.kind ? kind < o.kind : m < o.m; }
    bool operator==(const IntervalZ& o) const { return kind == o.kind && m == o.m; }
};

/// I + J; nullopt when the sum is all of Z
std::optional<IntervalZ> interval_sum(const IntervalZ& a, const IntervalZ& b);

/// integer shifts z with (v, v' + z) in X for the orbit o; X over (v, v')
std::vector<IntervalZ> shifts_into(const RefOrbit& o, const ZoneDNF& X);

struct DecompEntry {
    RefOrbit orbit;
    IntervalZ interval;
};

/// {(o, z) : image orbit of (o, z) inside X}, X over (v, v') of the locations (l1, l2)
std::vector<DecompEntry> inverse_image(const ZoneDNF& X, const std::vector<RefOrbit>& candidates);
std::vector<DecompEntry> inverse_image(const ZoneDNF& X, const Location& l1, const Location& l2);

// ── Equation systems ──

struct EquationBuild {
    EqSystem system;
    /// variable id -> reference orbit (gadgets and helpers have none)
    std::map<int, RefOrbit> orbit_of_var;
    std::vector<int> initial_final;
    /// counts of emitted inclusions per family: base, nop, transitivity, timeless push-pop, timed push-pop
    std::size_t n_base = 0, n_nop = 0, n_trans = 0, n_timeless = 0, n_timed = 0;
    std::string header() const;
};

/// expects the output of preprocess; only derivable orbits get inclusions
EquationBuild build_equations(const TrPDA& pre);

enum class Emptiness { Empty, Nonempty, Unknown };
std::string emptiness_str(Emptiness e);

struct EmptinessReport {
    Emptiness verdict = Emptiness::Unknown;
    std::size_t variables = 0, inclusions = 0;
    bool intersection_free = true;
};

EmptinessReport decide_emptiness(const TrPDA& a, std::size_t budget = 10000);

// ── Orbit-graph route ──

struct UntimedPDA {
    std::vector<std::string> states, stack, letters;
    struct Trans {
        int from, to;
        int letter = -1;  // -1 = epsilon
        int pop = -1, push = -1;
    };
    std::vector<Trans> trans;
    std::vector<int> initial, final;
    /// final state reachable from an initial one with an empty starting stack
    bool nonempty() const;
    std::string str() const;
};

/// classical PDA over the state orbits reachable from the initial ones (stack ignored) and letter orbits; requires a timeless stack
UntimedPDA untiming_pda(const TrPDA& a);

/// stops at the first accepting same-level path; explored = state orbits generated
Emptiness decide_emptiness_orbit(const TrPDA& a, std::size_t* explored = nullptr);
Emptiness decide_emptiness_trcfg(const TrCFG& g);

// ── Small-instance checks ──

/// bounded search for an empty-stack run from p to q (stack symbols must not use the marker label)
Tri horizontal_reachable(const TrPDA& pre, const Element& p, const Element& q, std::size_t max_steps);

} // namespace tpda
