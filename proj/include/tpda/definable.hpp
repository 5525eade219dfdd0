#pragma once
// Location-indexed definable sets and relations.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpda/orbit.hpp"

namespace tpda {

struct Location {
    std::string label;
    std::size_t dim = 0;
    ZoneDNF constraint;
};

struct Element {
    std::string label;
    Point point;
    bool operator==(const Element& o) const { return label == o.label && point == o.point; }
    std::string str() const;
};

struct DefinableSet {
    std::vector<Location> locs;

    const Location* find(const std::string& label) const;
    std::size_t dim_of(const std::string& label) const;
    bool is_timeless() const;
    std::size_t max_dim() const;
    /// add a location; throws on a duplicate label or dimension mismatch
    void add(const std::string& label, std::size_t dim, ZoneDNF c);
    void add(const std::string& label, std::size_t dim) { add(label, dim, ZoneDNF::top(dim)); }
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotOrbitFinite : std::invalid_argument {
    std::string location;
    explicit NotOrbitFinite(const std::string& loc)
        : std::invalid_argument("location '" + loc + "' has unbounded span"), location(loc) {}
};

/// uniform span bound over all locations, or nullopt
std::optional<Int> is_orbit_finite(const DefinableSet& X, std::string* certificate = nullptr);

/// one orbit of a location; timeless when the location has dimension 0
struct LocOrbit {
    std::string label;
    Orbit orbit;
    bool timeless() const { return orbit.dim() == 0; }
    bool operator<(const LocOrbit& o) const { return label != o.label ? label < o.label : orbit < o.orbit; }
    bool operator==(const LocOrbit& o) const { return label == o.label && orbit == o.orbit; }
    std::string str() const;
};

std::vector<LocOrbit> orbits(const DefinableSet& X);
bool member(const DefinableSet& X, const Element& e);
DefinableSet product_with_timeless(const DefinableSet& X, const DefinableSet& T);

/// finite map from index tuples to constraints over the concatenated dimensions
struct DefinableRelation {
    std::vector<DefinableSet> index_sets;
    std::map<std::vector<std::string>, ZoneDNF> entries;

    std::size_t arity() const { return index_sets.size(); }
    std::size_t dim_of(const std::vector<std::string>& key) const;
    void add(const std::vector<std::string>& key, ZoneDNF c);
    bool member(const std::vector<Element>& tuple) const;
};

} // namespace tpda
