#include "doctest.h"

#include <random>

#include "tpda/constraint.hpp"
#include "tpda/orbit.hpp"

using namespace tpda;

namespace {

Point pt(std::initializer_list<const char*> xs) {
    Point p;
    for (auto s : xs) p.push_back(parse_rational(s));
    return p;
}

/// random closed zone with small constants
Zone random_zone(std::mt19937_64& rng, std::size_t d, int maxc) {
    std::uniform_int_distribution<int> c(-maxc, maxc), pick(0, 3);
    Zone z(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (i != j && pick(rng) == 0) z.add(i, j, make_bound(c(rng), pick(rng) < 2));
    return z;
}

} // namespace

// ── Bounds ──

TEST_CASE("bound order and addition") {
    CHECK(make_bound(3, true) < make_bound(3, false));
    CHECK(make_bound(3, false) < make_bound(4, true));
    CHECK(bound_add(make_bound(1, false), make_bound(2, true)) == make_bound(3, true));
    CHECK(bound_add(make_bound(1, false), kInf) == kInf);
    CHECK_THROWS_AS(checked_add(INT64_MAX, 1), std::overflow_error);
}

// ── Canonicalization ──

TEST_CASE("contradictory strict cycle is empty") {
    Zone z(2);
    z.add(0, 1, make_bound(0, true));
    z.add(1, 0, make_bound(0, true));
    CHECK_FALSE(z.canonicalize());
    CHECK(z.is_empty());
}

TEST_CASE("closure adds transitive bound") {
    auto c = parse_constraint("x1 - x2 <= 1 & x2 - x3 <= 1", 3);
    REQUIRE(c.disjuncts.size() == 1);
    CHECK(c.disjuncts[0].at(0, 2) == make_bound(2, false));
}

TEST_CASE("unconstrained dim 1 stays satisfiable") {
    Zone z(1);
    CHECK(z.canonicalize());
}

TEST_CASE("incremental constrain agrees with full closure") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 300; ++t) {
        Zone z = random_zone(rng, 4, 5);
        if (!z.canonicalize()) continue;
        Zone a = z, b = z;
        std::uniform_int_distribution<int> c(-5, 5), ij(0, 3);
        std::size_t i = ij(rng), j = ij(rng);
        if (i == j) continue;
        Raw bd = make_bound(c(rng), c(rng) > 0);
        bool ra = a.constrain(i, j, bd);
        b.add(i, j, bd);
        bool rb = b.canonicalize();
        REQUIRE(ra == rb);
        if (ra) CHECK(a == b);
    }
}

TEST_CASE("canonicalize preserves membership of sampled points") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        Zone raw = random_zone(rng, 3, 4);
        Zone closed = raw;
        if (!closed.canonicalize()) continue;
        for (int k = 0; k < 100; ++k) {
            Point p = Zone(3).sample(rng);
            CHECK(raw.contains(p) == closed.contains(p));
        }
        Zone again = closed;
        again.canonicalize();
        CHECK(again == closed);
    }
}

// ── Witnesses and span ──

TEST_CASE("witness of x < y < x+4") {
    auto c = parse_constraint("x1 - x2 < 0 & x2 - x1 < 4", 2);
    auto w = c.witness();
    REQUIRE(w);
    CHECK(c.contains(*w));
    for (auto& q : *w) CHECK(q.get_den() <= 3);
    CHECK_FALSE(ZoneDNF::bottom(2).witness());
    CHECK_FALSE(parse_constraint("x1 - x2 = 5 & x2 - x1 = 5", 2).witness());
}

TEST_CASE("witness lies in random zones") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 300; ++t) {
        Zone z = random_zone(rng, 4, 6);
        auto w = z.witness();
        Zone c = z;
        CHECK(w.has_value() == c.canonicalize());
        if (w) {
            CHECK(z.contains(*w));
            for (auto& q : *w) CHECK(q.get_den() <= 5);
        }
    }
}

TEST_CASE("span bounds") {
    // x < y < z+1 < x+4
    auto a = parse_constraint("x1 < x2 & x2 < x3 + 1 & x3 + 1 < x1 + 4", 3);
    REQUIRE(span_bound(a));
    CHECK(*span_bound(a) == 4);
    auto b = parse_constraint("x1 = x2 | x2 > x1 + 2", 2);
    CHECK_FALSE(span_bound(b));
    CHECK(*span_bound(ZoneDNF::top(1)) == 0);
}

TEST_CASE("parser handles sugar and errors") {
    auto c = parse_constraint("x1 - x2 != 0", 2);
    CHECK(c.disjuncts.size() == 2);
    CHECK(parse_constraint("false", 2).is_empty());
    CHECK_FALSE(parse_constraint("true", 2).is_empty());
    CHECK_THROWS_AS(parse_constraint("x1 - x9 < 0", 2), ParseError);
    CHECK_THROWS_AS(parse_constraint("x1 + x2 < 0", 2), ParseError);
    CHECK_THROWS_AS(parse_constraint("(x1 < x2", 2), ParseError);
    auto e = parse_constraint("(x1 - x2 <= 3 & x2 - x1 <= -3)", 2);
    CHECK(e.str() == "x1 - x2 = 3");
}

// ── Orbits ──

TEST_CASE("orbit of (2, 3.3, -1.7)") {
    Orbit o = orbit_of(pt({"2", "3.3", "-1.7"}));
    CHECK(o.interval(1, 0) == Interval{1, true});
    CHECK(o.interval(1, 2) == Interval{5, false});
    CHECK(orbit_of(pt({"0"})).dim() == 1);
    CHECK(orbit_of(pt({"0", "0"})).interval(0, 1) == Interval{0, false});
}

TEST_CASE("orbit invariance under shifts and warps") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        Point p = Zone(4).sample(rng);
        Orbit o = orbit_of(p);
        CHECK(o.zone().contains(p));
        Point q = p;
        Rational s(std::uniform_int_distribution<int>(-50, 50)(rng), 7);
        for (auto& x : q) x += s;
        CHECK(orbit_of(q) == o);
        // monotone warp of [0,1) applied to fractional parts: f -> f^2 keeps order and integer distances
        Point w = p;
        for (auto& x : w) {
            mpz_class f;
            mpz_fdiv_q(f.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
            Rational fr = x - Rational(f);
            x = Rational(f) + fr * fr;
        }
        CHECK(orbit_of(w) == orbit_of(p));
        CHECK(orbit_of(o.rep()) == o);
    }
}

TEST_CASE("eval over minimal") {
    auto c = parse_constraint("0 < x2 - x1 & x2 - x1 < 1", 2);
    CHECK(eval_over_minimal(c, orbit_of(pt({"0", "1/2"}))));
    CHECK_FALSE(eval_over_minimal(parse_constraint("x2 - x1 > 3", 2), orbit_of(pt({"0", "3"}))));
    auto x = parse_constraint("0 < x2 - x1 & x2 - x1 < 1 & x3 - x2 > 3", 3);
    CHECK(eval_over_minimal(x, orbit_of(pt({"0", "1/2", "9/2"}))));
}

TEST_CASE("gaps") {
    // 0 < y-x < 1, z-y = 7, w-z = 7
    Orbit o = orbit_of(pt({"0", "1/2", "15/2", "29/2"}));
    auto s = admits_gap(o, 7);
    REQUIRE(s);
    CHECK(s->left == std::vector<std::size_t>{0, 1});
    CHECK(s->right == std::vector<std::size_t>{2, 3});
    CHECK_FALSE(admits_gap(orbit_of(pt({"0", "0"})), 1));
    CHECK_FALSE(admits_gap(orbit_of(pt({"0", "1/3", "2/3"})), 1));
    auto e = k_extension(o, 7);
    CHECK(e.extended.size() == 2);
    Zone z = e.zone();
    CHECK(z.contains(pt({"0", "1/2", "8", "100"})));
    CHECK_FALSE(z.contains(pt({"0", "1/2", "7", "100"})));
    auto e2 = k_extension(orbit_of(pt({"0", "7"})), 7);
    CHECK(e2.zone().contains(pt({"0", "7"})));
    CHECK(e2.zone().contains(pt({"0", "123/5"})));
    CHECK_FALSE(e2.zone().contains(pt({"0", "6"})));
    CHECK_THROWS(k_extension(orbit_of(pt({"0", "1/2"})), 7));
}

TEST_CASE("orbits of x < y < x+4 are seven") {
    auto a = parse_constraint("x1 < x2 & x2 < x1 + 4", 2);
    CHECK(enumerate_orbits(a).size() == 7);
    CHECK(enumerate_orbits(ZoneDNF::top(1)).size() == 1);
}

TEST_CASE("normal form of 0<y-x<1 & z-y>3 has the 4-extension") {
    auto x = parse_constraint("0 < x2 - x1 & x2 - x1 < 1 & x3 - x2 > 3", 3);
    auto nf = normal_form(x);
    auto target = k_extension(orbit_of(pt({"0", "1/2", "9/2"})), 4);
    bool found = false;
    for (auto& c : nf) found = found || c == target;
    CHECK(found);
    CHECK(normal_form(ZoneDNF::bottom(3)).empty());
    auto single = parse_constraint("0 < x2 - x1 & x2 - x1 < 1", 2);
    CHECK(normal_form(single).size() == 1);
}

TEST_CASE("projection of x<y<z onto x,z") {
    auto c = parse_constraint("x1 < x2 & x2 < x3", 3);
    auto p = project(3, normal_form(c), {0, 2});
    auto direct = normal_form(parse_constraint("x1 < x2", 2));
    auto pd = components_to_dnf(2, p), dd = components_to_dnf(2, direct);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 500; ++k) {
        Point q = Zone(2).sample(rng);
        CHECK(pd.contains(q) == dd.contains(q));
    }
    auto one = project(1, normal_form(ZoneDNF::top(1)), {});
    CHECK(one.size() == 1);
}

TEST_CASE("amalgamation glues on shared coordinates") {
    Orbit a = orbit_of(pt({"0", "1/2"}));
    Orbit b = orbit_of(pt({"0", "1/3"}));
    auto r = amalgamate(a, b, {{0, 0}});
    // third coordinate relative to second: before, equal, after
    CHECK(r.size() == 3);
    for (auto& o : r) {
        CHECK(orbit_select(o, {0, 1}) == a);
        CHECK(orbit_select(o, {0, 2}) == b);
    }
}
