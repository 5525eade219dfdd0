#include "tpda/orbit.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

#include "tpda/constraint.hpp"

namespace tpda {

namespace {

Int floor_div(Int a, Int b) {
    Int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

std::string vname(const std::vector<std::string>& names, std::size_t i) {
    return i < names.size() ? names[i] : "x" + std::to_string(i + 1);
}

} // namespace

bool interval_within(const Interval& iv, Raw b) {
    if (b == kInf) return true;
    Int v = bound_value(b);
    if (iv.open) return iv.z + 1 <= v;
    return bound_strict(b) ? iv.z < v : iv.z <= v;
}

// ── Minimal constraints ──

int Orbit::classes() const {
    int c = 0;
    for (int r : rank) c = std::max(c, r + 1);
    return c;
}

Interval Orbit::interval(std::size_t i, std::size_t j) const {
    Int d = floor[i] - floor[j];
    if (rank[i] == rank[j]) return {d, false};
    if (rank[i] > rank[j]) return {d, true};
    return {d - 1, true};
}

std::vector<Int> Orbit::scaled_rep() const {
    Int c = std::max(classes(), 1);
    std::vector<Int> v(dim());
    for (std::size_t i = 0; i < dim(); ++i) v[i] = checked_add(checked_mul(floor[i], c), rank[i]);
    return v;
}

Point Orbit::rep() const {
    Int c = std::max(classes(), 1);
    auto v = scaled_rep();
    Point p(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        p[i] = Rational(v[i], c);
        p[i].canonicalize();
    }
    return p;
}

Zone Orbit::zone() const {
    Zone z(dim());
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = 0; j < dim(); ++j) {
            if (i == j) continue;
            Interval iv = interval(i, j);
            z.add(i, j, iv.open ? make_bound(iv.z + 1, true) : make_bound(iv.z, false));
        }
    z.canonicalize();
    return z;
}

Int Orbit::span() const {
    Int s = 0;
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = 0; j < dim(); ++j)
            if (i != j) s = std::max(s, interval(i, j).sup());
    return s;
}

std::string Orbit::str(const std::vector<std::string>& names) const {
    std::vector<std::string> atoms;
    for (std::size_t i = 0; i < dim(); ++i)
        for (std::size_t j = i + 1; j < dim(); ++j) {
            Interval iv = interval(j, i);
            std::string d = vname(names, j) + " - " + vname(names, i);
            if (iv.open)
                atoms.push_back(std::to_string(iv.z) + " < " + d + " < " + std::to_string(iv.z + 1));
            else
                atoms.push_back(d + " = " + std::to_string(iv.z));
        }
    if (atoms.empty()) return "true";
    std::string out;
    for (std::size_t k = 0; k < atoms.size(); ++k) out += (k ? " & " : "") + atoms[k];
    return out;
}

Orbit orbit_of_scaled(const std::vector<Int>& v, Int den) {
    Orbit o;
    const std::size_t d = v.size();
    o.floor.resize(d);
    o.rank.resize(d);
    if (d == 0) return o;
    std::vector<Int> frac(d);
    for (std::size_t i = 0; i < d; ++i) {
        Int diff = checked_add(v[i], checked_neg(v[0]));
        o.floor[i] = floor_div(diff, den);
        frac[i] = diff - o.floor[i] * den;
    }
    std::vector<Int> sorted = frac;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::size_t i = 0; i < d; ++i)
        o.rank[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), frac[i]) - sorted.begin());
    return o;
}

Orbit orbit_of(const Point& p) {
    Orbit o;
    const std::size_t d = p.size();
    o.floor.resize(d);
    o.rank.resize(d);
    if (d == 0) return o;
    std::vector<Rational> frac(d);
    for (std::size_t i = 0; i < d; ++i) {
        Rational diff = p[i] - p[0];
        mpz_class f;
        mpz_fdiv_q(f.get_mpz_t(), diff.get_num_mpz_t(), diff.get_den_mpz_t());
        if (!f.fits_slong_p()) throw std::overflow_error("coordinate difference too large");
        o.floor[i] = f.get_si();
        frac[i] = diff - Rational(f);
    }
    std::vector<Rational> sorted = frac;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::size_t i = 0; i < d; ++i)
        o.rank[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), frac[i]) - sorted.begin());
    return o;
}

Orbit orbit_select(const Orbit& o, const std::vector<std::size_t>& pick) {
    auto v = o.scaled_rep();
    std::vector<Int> w(pick.size());
    for (std::size_t k = 0; k < pick.size(); ++k) w[k] = v[pick[k]];
    return orbit_of_scaled(w, std::max(o.classes(), 1));
}

bool eval_over_minimal(const ZoneDNF& c, const Orbit& m) {
    if (m.dim() != c.dim) throw std::invalid_argument("dimension mismatch in eval_over_minimal");
    auto v = m.scaled_rep();
    Int s = std::max(m.classes(), 1);
    for (auto& z : c.disjuncts) {
        if (z.is_empty()) continue;
        bool ok = true;
        for (std::size_t i = 0; i < c.dim && ok; ++i)
            for (std::size_t j = 0; j < c.dim && ok; ++j) {
                if (i == j) continue;
                Raw b = z.at(i, j);
                if (b == kInf) continue;
                Int d = v[i] - v[j];
                Int lim = checked_mul(bound_value(b), s);
                ok = bound_strict(b) ? d < lim : d <= lim;
            }
        if (ok) return true;
    }
    return false;
}

// ── Gaps and extensions ──

namespace {

/// coordinates grouped by equal value, groups in increasing order
std::vector<std::vector<std::size_t>> value_groups(const Orbit& m) {
    std::map<std::pair<Int, int>, std::vector<std::size_t>> g;
    for (std::size_t i = 0; i < m.dim(); ++i) g[{m.floor[i], m.rank[i]}].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [k, v] : g) out.push_back(v);
    return out;
}

bool is_gap(const Interval& iv, Int g) { return iv.z >= g; }

} // namespace

std::optional<Split> admits_gap(const Orbit& m, Int g) {
    auto groups = value_groups(m);
    for (std::size_t k = 0; k + 1 < groups.size(); ++k) {
        Interval iv = m.interval(groups[k + 1][0], groups[k].back());
        if (is_gap(iv, g)) {
            Split s;
            for (std::size_t a = 0; a <= k; ++a) s.left.insert(s.left.end(), groups[a].begin(), groups[a].end());
            for (std::size_t a = k + 1; a < groups.size(); ++a)
                s.right.insert(s.right.end(), groups[a].begin(), groups[a].end());
            std::sort(s.left.begin(), s.left.end());
            std::sort(s.right.begin(), s.right.end());
            return s;
        }
    }
    return std::nullopt;
}

NFComponent k_extension(const Orbit& m, Int K) {
    auto groups = value_groups(m);
    NFComponent c{m, {}};
    for (std::size_t k = 0; k + 1 < groups.size(); ++k) {
        std::size_t i = groups[k + 1][0], j = groups[k][0];
        if (is_gap(m.interval(i, j), K)) c.extended.push_back({i, j});
    }
    if (c.extended.empty()) throw std::invalid_argument("orbit admits no gap of the requested size");
    std::sort(c.extended.begin(), c.extended.end());
    return c;
}

Zone NFComponent::zone() const {
    if (extended.empty()) return base.zone();
    const std::size_t d = base.dim();
    // block id per coordinate: count extended splits below the value
    auto groups = value_groups(base);
    std::vector<int> block(d, 0);
    std::set<std::size_t> split_after;  // group index k such that k | k+1 is relaxed
    for (std::size_t k = 0; k + 1 < groups.size(); ++k)
        for (auto& e : extended)
            if (std::find(groups[k + 1].begin(), groups[k + 1].end(), e.first) != groups[k + 1].end() &&
                std::find(groups[k].begin(), groups[k].end(), e.second) != groups[k].end())
                split_after.insert(k);
    int b = 0;
    for (std::size_t k = 0; k < groups.size(); ++k) {
        for (auto i : groups[k]) block[i] = b;
        if (split_after.count(k)) ++b;
    }
    Zone z(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            if (i == j || block[i] != block[j]) continue;
            Interval iv = base.interval(i, j);
            z.add(i, j, iv.open ? make_bound(iv.z + 1, true) : make_bound(iv.z, false));
        }
    for (auto [i, j] : extended) {
        Interval iv = base.interval(i, j);
        // x_i - x_j >= z, or > z when open
        z.add(j, i, make_bound(-iv.z, iv.open));
    }
    z.canonicalize();
    return z;
}

std::string NFComponent::str(const std::vector<std::string>& names) const {
    if (extended.empty()) return base.str(names);
    return zone().str(names);
}

bool NFComponent::operator<(const NFComponent& o) const {
    if (base == o.base) return extended < o.extended;
    return base < o.base;
}

// ── Enumeration and normal form ──

namespace {

void enumerate_zone(const Zone& z, std::optional<Int> limit, std::set<Orbit>& out) {
    const std::size_t d = z.dim();
    if (d == 0) {
        out.insert(Orbit{});
        return;
    }
    Orbit o;
    o.floor.assign(d, 0);
    o.rank.assign(d, 0);
    int C = 1;
    std::vector<std::pair<Int, Int>> range(d);
    for (std::size_t i = 1; i < d; ++i) {
        Raw up = z.at(i, 0), dn = z.at(0, i);
        Int lo = INT64_MIN, hi = INT64_MAX;
        if (up != kInf) hi = bound_value(up);
        if (dn != kInf) lo = -bound_value(dn) - 1;
        if (limit) {
            hi = std::min(hi, *limit);
            lo = std::max(lo, -*limit - 1);
        }
        if (lo == INT64_MIN || hi == INT64_MAX) throw std::invalid_argument("orbit enumeration needs a span bound");
        range[i] = {lo, hi};
    }
    auto consistent = [&](std::size_t i) {
        for (std::size_t j = 0; j < i; ++j) {
            Interval iv = o.interval(i, j);
            if (!interval_within(iv, z.at(i, j)) || !interval_within(iv.negate(), z.at(j, i))) return false;
            if (limit && (iv.sup() > *limit || iv.negate().sup() > *limit)) return false;
        }
        if (limit) {
            // partial span: compare against every earlier pair
            for (std::size_t a = 0; a <= i; ++a)
                for (std::size_t b = 0; b < a; ++b)
                    if (o.interval(a, b).sup() > *limit || o.interval(b, a).sup() > *limit) return false;
        }
        return true;
    };
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == d) {
            out.insert(o);
            return;
        }
        for (Int n = range[i].first; n <= range[i].second; ++n) {
            o.floor[i] = n;
            // join an existing class
            for (int k = 0; k < C; ++k) {
                o.rank[i] = k;
                if (consistent(i)) rec(i + 1);
            }
            // open a new class at position p (after the anchor's class)
            for (int p = 1; p <= C; ++p) {
                for (std::size_t j = 0; j < i; ++j)
                    if (o.rank[j] >= p) ++o.rank[j];
                o.rank[i] = p;
                ++C;
                if (consistent(i)) rec(i + 1);
                --C;
                for (std::size_t j = 0; j < i; ++j)
                    if (o.rank[j] > p) --o.rank[j];
            }
        }
        o.floor[i] = 0;
        o.rank[i] = 0;
    };
    rec(1);
}

} // namespace

std::vector<Orbit> enumerate_orbits(const ZoneDNF& c, std::optional<Int> span_limit) {
    std::set<Orbit> out;
    for (auto z : c.disjuncts) {
        if (!z.canonicalize()) continue;
        enumerate_zone(z, span_limit, out);
    }
    return {out.begin(), out.end()};
}

Int nf_constant(const ZoneDNF& c) {
    return checked_add(1, c.raw_max >= 0 ? c.raw_max : c.max_constant());
}

std::vector<NFComponent> normal_form(const ZoneDNF& c, std::optional<Int> Kopt) {
    const Int K = Kopt ? *Kopt : nf_constant(c);
    std::set<NFComponent> comps;
    if (c.dim <= 1) {
        if (!c.is_empty()) comps.insert(NFComponent{Orbit{std::vector<Int>(c.dim, 0), std::vector<int>(c.dim, 0)}, {}});
        return {comps.begin(), comps.end()};
    }
    const Int limit = checked_mul(static_cast<Int>(c.dim) - 1, K);
    for (auto& o : enumerate_orbits(c, limit)) {
        // gaps strictly beyond K are covered by the extension of a shrunk orbit
        auto groups = value_groups(o);
        bool wide = false;
        for (std::size_t k = 0; k + 1 < groups.size() && !wide; ++k) {
            Interval iv = o.interval(groups[k + 1][0], groups[k][0]);
            if (iv.z > K || (iv.z == K && iv.open)) wide = true;
        }
        if (wide) continue;
        if (admits_gap(o, K)) comps.insert(k_extension(o, K));
        else comps.insert(NFComponent{o, {}});
    }
    return {comps.begin(), comps.end()};
}

ZoneDNF components_to_dnf(std::size_t dim, const std::vector<NFComponent>& comps) {
    ZoneDNF r = ZoneDNF::bottom(dim);
    for (auto& c : comps) r.disjuncts.push_back(c.zone());
    return r;
}

std::vector<NFComponent> project(std::size_t dim, const std::vector<NFComponent>& comps,
                                 const std::vector<std::size_t>& keep) {
    ZoneDNF p = dnf_project(components_to_dnf(dim, comps), keep);
    return normal_form(p);
}

// ── Fast membership ──

std::vector<Int> NFIndex::key(const Orbit& o, const std::vector<std::vector<std::size_t>>& blocks) {
    std::vector<Int> k;
    for (auto& b : blocks) {
        std::vector<std::size_t> idx = b;
        std::sort(idx.begin(), idx.end());
        k.push_back(-1);
        for (auto i : idx) k.push_back(static_cast<Int>(i));
        Orbit sub = orbit_select(o, idx);
        k.push_back(-2);
        k.insert(k.end(), sub.floor.begin(), sub.floor.end());
        k.insert(k.end(), sub.rank.begin(), sub.rank.end());
    }
    return k;
}

NFIndex::NFIndex(std::size_t dim, const std::vector<NFComponent>& comps) : dim_(dim) {
    for (auto& c : comps) {
        if (!c.is_extension()) {
            orbits_.insert(c.base);
            continue;
        }
        auto groups = value_groups(c.base);
        std::vector<std::vector<std::size_t>> blocks(1);
        for (std::size_t k = 0; k < groups.size(); ++k) {
            if (k > 0) {
                bool cut = false;
                for (auto& e : c.extended)
                    if (std::find(groups[k].begin(), groups[k].end(), e.first) != groups[k].end()) cut = true;
                if (cut) blocks.emplace_back();
            }
            blocks.back().insert(blocks.back().end(), groups[k].begin(), groups[k].end());
        }
        ext_[key(c.base, blocks)].push_back(c.zone());
    }
}

bool NFIndex::contains(const Point& p) const {
    if (p.size() != dim_) return false;
    Orbit o = orbit_of(p);
    if (orbits_.count(o)) return true;
    if (ext_.empty()) return false;
    auto groups = value_groups(o);
    const std::size_t g = groups.size();
    if (g < 2) return false;
    // every way of cutting the sorted groups into consecutive blocks
    for (std::size_t mask = 1; mask < (std::size_t{1} << (g - 1)); ++mask) {
        std::vector<std::vector<std::size_t>> blocks(1);
        for (std::size_t k = 0; k < g; ++k) {
            if (k > 0 && (mask >> (k - 1) & 1)) blocks.emplace_back();
            blocks.back().insert(blocks.back().end(), groups[k].begin(), groups[k].end());
        }
        auto it = ext_.find(key(o, blocks));
        if (it == ext_.end()) continue;
        for (auto& z : it->second)
            if (z.contains(p)) return true;
    }
    return false;
}

std::vector<Orbit> amalgamate(const Orbit& a, const Orbit& b,
                              const std::vector<std::pair<std::size_t, std::size_t>>& shared) {
    if (shared.empty()) throw std::invalid_argument("amalgamation needs a shared coordinate");
    const std::size_t da = a.dim(), db = b.dim();
    std::vector<std::size_t> map(db, SIZE_MAX);
    for (auto [ia, ib] : shared) map[ib] = ia;
    std::size_t next = da;
    for (std::size_t k = 0; k < db; ++k)
        if (map[k] == SIZE_MAX) map[k] = next++;
    Zone z = a.zone().embed(next, [&] {
        std::vector<std::size_t> id(da);
        for (std::size_t k = 0; k < da; ++k) id[k] = k;
        return id;
    }());
    Zone zb = b.zone();
    for (std::size_t i = 0; i < db; ++i)
        for (std::size_t j = 0; j < db; ++j)
            if (i != j) z.add(map[i], map[j], zb.at(i, j));
    if (!z.canonicalize()) return {};
    std::set<Orbit> out;
    enumerate_zone(z, std::nullopt, out);
    return {out.begin(), out.end()};
}

} // namespace tpda
