#include <doctest.h>

#include <random>

#include "tpda/constraint.hpp"
#include "tpda/intsets.hpp"
#include "tpda/io.hpp"

using namespace tpda;

namespace {

/// brute-force membership of a single component in a window
bool comp_has(int kind, Int a, Int p, Int k) {
    switch (kind) {
        case 0: return k == a;
        case 1: return k >= a && (k - a) % p == 0;
        case 2: return k <= a && (a - k) % p == 0;
        default: return ((k - a) % p + p) % p == 0;
    }
}

IntSetNF comp_set(int kind, Int a, Int p) {
    IntSetNF s;
    if (kind == 0) s.finite.insert(a);
    if (kind == 1) s.right.insert({a, p});
    if (kind == 2) s.left.insert({a, p});
    if (kind == 3) s.cosets.insert({((a % p) + p) % p, p});
    return s;
}

EqSystem random_system(std::mt19937& rng, int nvars, int nincs, int ninter) {
    EqSystem s;
    for (int v = 0; v < nvars; ++v) s.var("X" + std::to_string(v));
    std::uniform_int_distribution<int> var(0, nvars - 1), kc(-1, 1), kind(0, 2);
    for (int i = 0; i < nincs; ++i) {
        int k = kind(rng);
        if (k == 0)
            s.add_const(var(rng), kc(rng));
        else
            s.add_add(var(rng), var(rng), var(rng));
    }
    for (int i = 0; i < ninter; ++i) s.add_inter(var(rng), var(rng));
    return s;
}

} // namespace

TEST_CASE("nf_add matches brute force on random component pairs") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_int_distribution<Int> anchor(-20, 20), period(1, 7);
    for (int it = 0; it < 500; ++it) {
        int k1 = kind(rng), k2 = kind(rng);
        Int a1 = anchor(rng), p1 = period(rng), a2 = anchor(rng), p2 = period(rng);
        IntSetNF s = nf_add(comp_set(k1, a1, p1), comp_set(k2, a2, p2));
        for (Int k = -200; k <= 200; ++k) {
            // k = u + v with both in range; generous range for the operands
            bool bf = false;
            for (Int u = -700; u <= 700 && !bf; ++u)
                if (comp_has(k1, a1, p1, u) && comp_has(k2, a2, p2, k - u)) bf = true;
            REQUIRE_MESSAGE(s.contains(k) == bf, s.str() << " at " << k);
        }
    }
}

TEST_CASE("nf_add known sums") {
    IntSetNF r3, r5, l2, r2;
    r3.right.insert({0, 3});
    r5.right.insert({0, 5});
    r2.right.insert({0, 2});
    l2.left.insert({0, 2});
    IntSetNF s = nf_add(r3, r5);
    for (Int k : {1, 2, 4, 7}) CHECK_FALSE(s.contains(k));
    for (Int k : {0, 3, 5, 6, 8, 9, 10, 11, 100}) CHECK(s.contains(k));
    IntSetNF e = nf_add(r2, l2);
    CHECK(e.cosets == std::set<std::pair<Int, Int>>{{0, 2}});
    CHECK(nf_add(IntSetNF::point(0), r3) == r3);
}

TEST_CASE("inclusion test") {
    IntSetNF a, b;
    a.cosets.insert({0, 1});
    b.right.insert({4, 3});
    CHECK(a.includes(b));
    CHECK_FALSE(b.includes(a));
    IntSetNF c;
    c.finite = {4, 7};
    CHECK(b.includes(c));
    c.finite.insert(5);
    CHECK_FALSE(b.includes(c));
}

TEST_CASE("gadgets solve exactly") {
    for (Int m : {0, 1, 13, 1031, -5}) {
        EqSystem s;
        int eq = s.gadget_eq(m), lt = s.gadget_lt(m), gt = s.gadget_gt(m), all = s.gadget_all();
        auto r = kleene_solve(s);
        REQUIRE(r.exact);
        for (Int k = m - 10; k <= m + 10; ++k) {
            CHECK(r.values[eq].contains(k) == (k == m));
            CHECK(r.values[lt].contains(k) == (k < m));
            CHECK(r.values[gt].contains(k) == (k > m));
            CHECK(r.values[all].contains(k));
        }
    }
}

TEST_CASE("equation file parsing") {
    EqSystem s = parse_eq(read_file(std::string(TPDA_DATA_DIR) + "/zconst.eq"));
    auto r = kleene_solve(s);
    REQUIRE(r.exact);
    auto v = [&](const char* n) { return r.values[*s.find(n)]; };
    CHECK(v("Z_eq_13").finite == std::set<Int>{13});
    CHECK(v("Z").contains(-7));
    CHECK(v("Z_lt_3").left == std::set<std::pair<Int, Int>>{{2, 1}});
    CHECK(v("Z_gt_3").contains(4));
    CHECK_FALSE(v("Z_gt_3").contains(3));
    CHECK(v("Big").finite == std::set<Int>{1031});
    CHECK(v("Mix").contains(0));
    CHECK(v("Mix").contains(11));
    CHECK_FALSE(v("Mix").contains(1));
    CHECK_THROWS_AS(parse_eq("X >= Y ^ Z\n"), ParseError);
    CHECK_THROWS_AS(parse_eq("X >= Y ^ {1}\n"), ParseError);
    CHECK_THROWS_AS(parse_eq("X >= \n"), ParseError);
}

TEST_CASE("union sugar introduces an auxiliary") {
    EqSystem s = parse_eq("X >= (Y | Z) + {1}\nY >= {0}\nZ >= {-1}\n");
    auto r = kleene_solve(s);
    REQUIRE(r.exact);
    CHECK(r.values[*s.find("X")].finite == std::set<Int>{0, 1});
    EqSystem b = parse_eq("X >= Y + Z\nY >= {1}\nZ >= Y ^ {0}\n");
    CHECK(b.incs.size() == 3);
}

TEST_CASE("small systems from the examples") {
    EqSystem s = parse_eq("X >= {1}\nX >= X + X\n");
    auto r = kleene_solve(s);
    REQUIRE(r.exact);
    CHECK(r.values[0].contains(5));
    CHECK_FALSE(r.values[0].contains(0));
    CHECK(derivation_oracle(s, 0, 5).elements.count(5));

    EqSystem e = parse_eq("X >= X + Y\nY >= {1}\n");
    CHECK_FALSE(nonempty_intersection_free(e, 0));

    EqSystem i = parse_eq("X >= Y ^ {0}\nY >= {1}\n");
    CHECK(membership(i, 0, 0) == Verdict::False);
    CHECK_THROWS(nonempty_intersection_free(i, 0));

    EqSystem n = parse_eq("X >= Y ^ {0}\nY >= Z + Z\nZ >= {1}\nZ >= {-1}\n");
    CHECK(nonempty(n, 0) == Verdict::True);
    CHECK(derivation_oracle(n, 0, 3).elements.count(0));

    EqSystem z;
    int all = z.gadget_all();
    CHECK(membership(z, all, -7) == Verdict::True);
    auto d3 = derivation_oracle(z, all, 3).elements;
    for (Int k = -3; k <= 3; ++k) CHECK(d3.count(k));
    EqSystem four;
    int f = four.gadget_eq(4);
    CHECK(membership(four, f, 5) == Verdict::False);
    CHECK(derivation_oracle(four, f, 0).elements.empty());
}

TEST_CASE("kleene soundness, post-fixpoint and oracle monotonicity") {
    std::mt19937 rng(11);
    int exact = 0;
    for (int it = 0; it < 150; ++it) {
        EqSystem s = random_system(rng, 5, 8, it % 3 == 0 ? 1 : 0);
        auto r = kleene_solve(s);
        if (!r.exact) continue;
        ++exact;
        for (auto& inc : s.incs) {
            IntSetNF rhs;
            if (inc.kind == Inclusion::Const) rhs = IntSetNF::point(inc.k);
            if (inc.kind == Inclusion::Inter && r.values[inc.y].contains(0)) rhs = IntSetNF::point(0);
            if (inc.kind == Inclusion::Add) rhs = nf_add(r.values[inc.y], r.values[inc.z]);
            CHECK(r.values[inc.x].includes(rhs));
        }
        for (int v = 0; v < 5; ++v) {
            auto d30 = derivation_oracle(s, v, 30, 256);
            auto d10 = derivation_oracle(s, v, 10, 256);
            for (Int k : d10.elements) CHECK(d30.elements.count(k));
            for (Int k : d30.elements) CHECK(r.values[v].contains(k));
            // elements of the result near zero are derivable
            for (Int k = -6; k <= 6; ++k)
                if (r.values[v].contains(k)) CHECK_MESSAGE(d30.elements.count(k), s.str() << v << " " << k);
            if (r.values[v].empty()) CHECK_FALSE(d30.nonempty);
        }
    }
    CHECK(exact > 100);
}

TEST_CASE("bounded membership never contradicts accelerated") {
    std::mt19937 rng(5);
    for (int it = 0; it < 100; ++it) {
        EqSystem s = random_system(rng, 4, 7, 1);
        for (Int k = -4; k <= 4; ++k)
            if (membership(s, 0, k, Backend::Bounded) == Verdict::True)
                CHECK(membership(s, 0, k, Backend::Accel) != Verdict::False);
    }
}
