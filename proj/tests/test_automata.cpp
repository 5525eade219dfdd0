#include "doctest.h"

#include "tpda/io.hpp"
#include "tpda/search.hpp"

using namespace tpda;

namespace {

TrPDA load(const std::string& name) { return parse_trpda(read_file(std::string(TPDA_DATA_DIR) + "/" + name)); }

} // namespace

TEST_CASE("example 1 accepts palindromes") {
    TrPDA a = load("pda1.trpda");
    CHECK(accepts(a, parse_word("(a; 0, 1) (a; 0, 1)"), 6) == Tri::True);
    CHECK(accepts(a, parse_word("(a; 0, 1) (a; 5, 6)"), 6) == Tri::False);
    CHECK(accepts(a, parse_word("(a; 0, 1) (a; 1/2, 3) (a; 1/2, 3) (a; 0, 1)"), 8) == Tri::True);
    // not monotonic
    CHECK(accepts(a, parse_word("(a; 1, 2) (a; 0, 3) (a; 0, 3) (a; 1, 2)"), 8) == Tri::False);
    CHECK(accepts(a, TimedWord{}, 6) == Tri::True);
    CHECK_THROWS(accepts(a, parse_word("(a; 0, 9)"), 6));
}

TEST_CASE("example 1 oracle finds a palindrome") {
    TrPDA a = load("pda1.trpda");
    auto r = bounded_empty_oracle(a, 8);
    REQUIRE(r.nonempty);
    CHECK(accepts(a, r.word, 8) == Tri::True);
}

TEST_CASE("short form keeps acceptance") {
    TrPDA a = load("pda1.trpda");
    // fold the push of bot into a two-symbol push
    TrPDA b = a;
    b.rules[0] = Rule{"i", {}, std::nullopt, "one", {"bot", "bot"}, ZoneDNF::top(1), ""};
    b.rules[4] = Rule{"two", {"bot", "bot"}, std::nullopt, "f", {}, ZoneDNF::top(0), ""};
    CHECK_FALSE(b.is_short_form());
    TrPDA s = to_short_form(b);
    CHECK(s.is_short_form());
    for (auto w : {"(a; 0, 1) (a; 0, 1)", "(a; 0, 1) (a; 5, 6)", "(a; 0, 1) (a; 1, 2) (a; 1, 2) (a; 0, 1)"}) {
        auto word = parse_word(w);
        CHECK(accepts(b, word, 10) == accepts(s, word, 10));
    }
    CHECK(accepts(s, parse_word("(a; 0, 1) (a; 0, 1)"), 10) == Tri::True);
}

TEST_CASE("trpda print and parse round trip") {
    TrPDA a = load("pda1.trpda");
    TrPDA b = parse_trpda(print_trpda(a));
    CHECK(print_trpda(b) == print_trpda(a));
}

TEST_CASE("minsky encoding") {
    auto m = parse_minsky("0: inc1\n1: inc1\n2: inc1\n3: halt\n");
    TrPDA a = encode_minsky(m);
    CHECK_FALSE(validate(a).orbit_finite_class);
    CHECK(bounded_empty_oracle(a, 20).nonempty);
    auto loop = encode_minsky(parse_minsky("0: inc1\n1: goto 0\n2: halt\n"));
    CHECK_FALSE(bounded_empty_oracle(loop, 40).nonempty);
}
