#pragma once
// Orbits of Q^d under the automorphisms of (Q, <=, +1), gaps, normal form.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tpda/zone.hpp"

namespace tpda {

/// x_i - x_j in {z} (point) or in (z, z+1) (open)
struct Interval {
    Int z = 0;
    bool open = false;
    Interval negate() const { return open ? Interval{-z - 1, true} : Interval{-z, false}; }
    /// least integer B with every value <= B
    Int sup() const { return open ? z + 1 : z; }
    bool operator==(const Interval& o) const { return z == o.z && open == o.open; }
};

/// does every value of the interval satisfy the raw bound
bool interval_within(const Interval& iv, Raw b);

// ── Minimal constraints ──

/// Orbit encoding relative to coordinate 0: floor and fractional class of x_i - x_0.
struct Orbit {
    std::vector<Int> floor;  // floor[0] == 0
    std::vector<int> rank;   // dense rank of frac(x_i - x_0); rank[0] == 0

    std::size_t dim() const { return floor.size(); }
    /// number of fractional classes
    int classes() const;
    Interval interval(std::size_t i, std::size_t j) const;
    /// representative point scaled by classes(): values floor*c + rank
    std::vector<Int> scaled_rep() const;
    Point rep() const;
    Zone zone() const;
    Int span() const;

    bool operator==(const Orbit& o) const { return floor == o.floor && rank == o.rank; }
    bool operator<(const Orbit& o) const { return floor != o.floor ? floor < o.floor : rank < o.rank; }
    std::string str(const std::vector<std::string>& names = {}) const;
};

Orbit orbit_of(const Point& p);
/// orbit of v / den for integer v
Orbit orbit_of_scaled(const std::vector<Int>& v, Int den);
/// reorder / duplicate / drop coordinates: result coordinate k is input coordinate pick[k]
Orbit orbit_select(const Orbit& o, const std::vector<std::size_t>& pick);
/// true iff the orbit lies inside c
bool eval_over_minimal(const ZoneDNF& c, const Orbit& m);

// ── Gaps and extensions ──

struct Split {
    std::vector<std::size_t> left, right;
};

std::optional<Split> admits_gap(const Orbit& m, Int g);

/// an orbit, or the K-extension of it when extended is non-empty
struct NFComponent {
    Orbit base;
    /// (i, j) with x_i - x_j relaxed: i = min of the upper block, j = max of the lower block
    std::vector<std::pair<std::size_t, std::size_t>> extended;

    bool is_extension() const { return !extended.empty(); }
    Zone zone() const;
    std::string str(const std::vector<std::string>& names = {}) const;
    bool operator<(const NFComponent& o) const;
    bool operator==(const NFComponent& o) const { return base == o.base && extended == o.extended; }
};

NFComponent k_extension(const Orbit& m, Int K);

// ── Enumeration and normal form ──

/// all orbits contained in c with span <= span_limit (limit required if c is unbounded)
std::vector<Orbit> enumerate_orbits(const ZoneDNF& c, std::optional<Int> span_limit = std::nullopt);

/// constant used by the normal form: 1 + largest absolute constant
Int nf_constant(const ZoneDNF& c);

std::vector<NFComponent> normal_form(const ZoneDNF& c, std::optional<Int> K = std::nullopt);
ZoneDNF components_to_dnf(std::size_t dim, const std::vector<NFComponent>& comps);
std::vector<NFComponent> project(std::size_t dim, const std::vector<NFComponent>& comps,
                                 const std::vector<std::size_t>& keep);

/// point membership in a union of normal-form components without a linear scan
class NFIndex {
public:
    NFIndex(std::size_t dim, const std::vector<NFComponent>& comps);
    bool contains(const Point& p) const;

private:
    std::size_t dim_;
    std::set<Orbit> orbits_;
    // key: block sizes along the sorted order plus each block's orbit
    std::map<std::vector<Int>, std::vector<Zone>> ext_;
    static std::vector<Int> key(const Orbit& o, const std::vector<std::vector<std::size_t>>& blocks);
};

/// orbits over A's and B's coordinates glued on shared pairs (a_k, b_k);
/// result coordinates: all of A, then B's coordinates not shared, in order
std::vector<Orbit> amalgamate(const Orbit& a, const Orbit& b,
                              const std::vector<std::pair<std::size_t, std::size_t>>& shared);

} // namespace tpda
