#pragma once
// Difference-bound matrices over the rationals, and unions of them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace tpda {

using Int = std::int64_t;
using Rational = mpq_class;
using Point = std::vector<Rational>;

// ── Checked integer arithmetic ──

Int checked_add(Int a, Int b);
Int checked_mul(Int a, Int b);
Int checked_neg(Int a);

// ── Bounds ──
// raw encoding: 2*v + (strict ? 0 : 1); kInf means "no bound"

using Raw = Int;
inline constexpr Raw kInf = INT64_MAX;

[[noreturn]] void throw_bound_overflow();

/// bound `< v` or `<= v`
inline Raw make_bound(Int v, bool strict) {
    // keep clear of kInf
    if (v > (INT64_MAX >> 2) || v < -(INT64_MAX >> 2)) throw_bound_overflow();
    return 2 * v + (strict ? 0 : 1);
}
inline Int bound_value(Raw r) { return r >> 1; }
inline bool bound_strict(Raw r) { return (r & 1) == 0; }
inline Raw bound_add(Raw a, Raw b) {
    if (a == kInf || b == kInf) return kInf;
    Int v;
    if (__builtin_add_overflow(bound_value(a), bound_value(b), &v)) throw_bound_overflow();
    return make_bound(v, bound_strict(a) || bound_strict(b));
}
/// the complement of `x <= b` is `x > b`, i.e. `-x < -b`
Raw bound_negate(Raw b);
std::string bound_str(Raw b);

inline constexpr Raw kLeZero = 1;
inline constexpr Raw kLtZero = 0;

// ── Zone ──

/// Conjunction of x_i - x_j <(=) c over dim variables (no implicit zero clock).
class Zone {
public:
    Zone() = default;
    explicit Zone(std::size_t dim);

    std::size_t dim() const { return dim_; }
    Raw at(std::size_t i, std::size_t j) const { return m_[i * dim_ + j]; }
    Raw& at(std::size_t i, std::size_t j) { return m_[i * dim_ + j]; }

    /// tighten x_i - x_j by b without closing
    void add(std::size_t i, std::size_t j, Raw b);
    /// Floyd-Warshall; false if unsatisfiable
    bool canonicalize();
    bool is_closed() const { return closed_; }
    bool is_empty() const { return empty_; }
    /// incremental tighten on a closed zone, O(d^2); false if it became empty
    bool constrain(std::size_t i, std::size_t j, Raw b);

    /// append an unconstrained variable, returns its index
    std::size_t add_var();
    /// keep the given variables in the given order (closed zone -> exact projection)
    Zone restrict_to(const std::vector<std::size_t>& keep) const;
    /// place this zone into a larger space; map[i] = new index of variable i
    Zone embed(std::size_t new_dim, const std::vector<std::size_t>& map) const;

    bool contains(const Point& p) const;
    /// both closed and nonempty
    bool includes(const Zone& other) const;
    std::optional<Point> witness() const;
    /// uniform-ish random point of a closed nonempty zone
    Point sample(std::mt19937_64& rng, int spread = 6) const;

    bool operator==(const Zone& o) const { return dim_ == o.dim_ && m_ == o.m_ && empty_ == o.empty_; }
    bool operator<(const Zone& o) const;

    std::string str(const std::vector<std::string>& names = {}) const;

private:
    std::size_t dim_ = 0;
    bool closed_ = true;
    bool empty_ = false;
    std::vector<Raw> m_;
};

// ── Unions of zones ──

struct ZoneDNF {
    std::size_t dim = 0;
    std::vector<Zone> disjuncts;
    /// largest absolute constant as written in the source text, -1 if unknown
    Int raw_max = -1;

    static ZoneDNF top(std::size_t dim);
    static ZoneDNF bottom(std::size_t dim);

    /// close all disjuncts, drop empty ones, dedupe
    ZoneDNF& canonicalize();
    bool is_empty() const;
    bool contains(const Point& p) const;
    std::optional<Point> witness() const;
    /// largest absolute constant
    Int max_constant() const;
    std::string str(const std::vector<std::string>& names = {}) const;
};

ZoneDNF dnf_and(const ZoneDNF& a, const ZoneDNF& b);
ZoneDNF dnf_or(const ZoneDNF& a, const ZoneDNF& b);
ZoneDNF dnf_embed(const ZoneDNF& a, std::size_t new_dim, const std::vector<std::size_t>& map);
ZoneDNF dnf_project(const ZoneDNF& a, const std::vector<std::size_t>& keep);
/// exact inclusion of a zone in a union of zones (splits on uncovered atoms)
bool zone_subset(const Zone& z, const ZoneDNF& d);
/// least integer B with every point of the set having span <= B; nullopt if unbounded
std::optional<Int> span_bound(const ZoneDNF& a);

/// lcm of denominators
Int common_denominator(const Point& p);
std::string rational_str(const Rational& q);
Rational parse_rational(const std::string& s);

} // namespace tpda
