#include "tpda/definable.hpp"

#include <algorithm>

namespace tpda {

std::string Element::str() const {
    std::string s = "(" + label;
    for (std::size_t k = 0; k < point.size(); ++k) s += (k ? ", " : "; ") + rational_str(point[k]);
    return s + ")";
}

std::string LocOrbit::str() const {
    if (timeless()) return label;
    return label + " [" + orbit.str() + "]";
}

// ── Sets ──

const Location* DefinableSet::find(const std::string& label) const {
    for (auto& l : locs)
        if (l.label == label) return &l;
    return nullptr;
}

std::size_t DefinableSet::dim_of(const std::string& label) const {
    auto* l = find(label);
    if (!l) throw std::invalid_argument("unknown label '" + label + "'");
    return l->dim;
}

bool DefinableSet::is_timeless() const {
    return std::all_of(locs.begin(), locs.end(), [](const Location& l) { return l.dim == 0; });
}

std::size_t DefinableSet::max_dim() const {
    std::size_t d = 0;
    for (auto& l : locs) d = std::max(d, l.dim);
    return d;
}

void DefinableSet::add(const std::string& label, std::size_t dim, ZoneDNF c) {
    if (find(label)) throw std::invalid_argument("duplicate label '" + label + "'");
    if (c.dim != dim) throw DimensionMismatch("constraint dimension differs for '" + label + "'");
    c.canonicalize();
    locs.push_back({label, dim, std::move(c)});
}

std::optional<Int> is_orbit_finite(const DefinableSet& X, std::string* certificate) {
    Int best = 0;
    for (auto& l : X.locs) {
        auto b = span_bound(l.constraint);
        if (!b) {
            if (certificate) *certificate = l.label;
            return std::nullopt;
        }
        best = std::max(best, *b);
    }
    return best;
}

std::vector<LocOrbit> orbits(const DefinableSet& X) {
    std::vector<LocOrbit> out;
    for (auto& l : X.locs) {
        auto b = span_bound(l.constraint);
        if (!b) throw NotOrbitFinite(l.label);
        for (auto& o : enumerate_orbits(l.constraint, *b)) out.push_back({l.label, o});
    }
    return out;
}

bool member(const DefinableSet& X, const Element& e) {
    auto* l = X.find(e.label);
    if (!l) return false;
    if (l->dim != e.point.size())
        throw DimensionMismatch("element of '" + e.label + "' has " + std::to_string(e.point.size()) +
                                " coordinates, expected " + std::to_string(l->dim));
    return l->constraint.contains(e.point);
}

DefinableSet product_with_timeless(const DefinableSet& X, const DefinableSet& T) {
    if (!T.is_timeless()) throw std::invalid_argument("second factor must be timeless");
    DefinableSet r;
    for (auto& a : X.locs)
        for (auto& b : T.locs) {
            if (b.constraint.is_empty()) continue;
            r.add("<" + a.label + "," + b.label + ">", a.dim, a.constraint);
        }
    return r;
}

// ── Relations ──

std::size_t DefinableRelation::dim_of(const std::vector<std::string>& key) const {
    if (key.size() != arity()) throw DimensionMismatch("relation key has wrong arity");
    std::size_t d = 0;
    for (std::size_t k = 0; k < key.size(); ++k) d += index_sets[k].dim_of(key[k]);
    return d;
}

void DefinableRelation::add(const std::vector<std::string>& key, ZoneDNF c) {
    if (c.dim != dim_of(key)) throw DimensionMismatch("relation entry has wrong dimension");
    auto it = entries.find(key);
    if (it == entries.end()) entries.emplace(key, std::move(c));
    else it->second = dnf_or(it->second, c).canonicalize();
}

bool DefinableRelation::member(const std::vector<Element>& tuple) const {
    std::vector<std::string> key;
    Point p;
    for (auto& e : tuple) {
        key.push_back(e.label);
        p.insert(p.end(), e.point.begin(), e.point.end());
    }
    auto it = entries.find(key);
    if (it == entries.end()) return false;
    if (p.size() != it->second.dim) throw DimensionMismatch("tuple dimension mismatch");
    return it->second.contains(p);
}

} // namespace tpda
