// End-to-end acceptance checks; one PASS/FAIL line each. Pass names as arguments to run a subset.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "random_models.hpp"
#include "tpda/constraint.hpp"
#include "tpda/definable.hpp"
#include "tpda/dtpda.hpp"
#include "tpda/intsets.hpp"
#include "tpda/io.hpp"
#include "tpda/orbit.hpp"
#include "tpda/reachability.hpp"
#include "tpda/search.hpp"

using namespace tpda;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void fail(const std::string& why) {
        if (pass) detail << "first failure: " << why << "; ";
        pass = false;
    }
};

std::string data(const std::string& f) { return std::string(TPDA_DATA_DIR) + "/" + f; }

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ── Integer equations ──

void gadgets(Outcome& out) {
    auto t0 = std::chrono::steady_clock::now();
    int probes = 0;
    for (Int m : {Int(0), Int(1), Int(13), Int(1024 + 7)}) {
        EqSystem s;
        const int eq = s.gadget_eq(m), lt = s.gadget_lt(m), gt = s.gadget_gt(m), all = s.gadget_all();
        auto r = kleene_solve(s);
        if (!r.exact) out.fail("gadgets for " + std::to_string(m) + " not exact");
        std::mt19937_64 rng(static_cast<std::uint64_t>(m) + 1);
        std::uniform_int_distribution<Int> near(m - 40, m + 40);
        for (int p = 0; p < 20; ++p) {
            // half the probes at the boundary, half spread out
            Int k = p < 10 ? m - 5 + p : near(rng);
            auto want = [](bool b) { return b ? Verdict::True : Verdict::False; };
            std::pair<int, bool> cases[] = {{eq, k == m}, {lt, k < m}, {gt, k > m}, {all, true}};
            for (auto [v, in] : cases) {
                ++probes;
                if (membership(s, v, k) != want(in))
                    out.fail(s.names[v] + " at " + std::to_string(k));
            }
        }
    }
    double secs = since(t0);
    if (secs >= 5) out.fail("took " + std::to_string(secs) + "s");
    out.detail << probes << " probes, " << secs << "s";
}

/// random binary system over n variables; constants in {-1, 0, 1}
EqSystem random_binary_system(std::mt19937_64& rng, int nvars, int nincs, int ninter) {
    EqSystem s;
    for (int v = 0; v < nvars; ++v) s.var("X" + std::to_string(v));
    auto var = [&] { return testgen::pick(rng, 0, nvars - 1); };
    for (int i = 0; i < nincs - ninter; ++i) {
        if (testgen::pick(rng, 0, 2) == 0) s.add_const(var(), testgen::pick(rng, -1, 1));
        else s.add_add(var(), var(), var());
    }
    for (int i = 0; i < ninter; ++i) s.add_inter(var(), var());
    return s;
}

void intersection_free_vs_oracle(Outcome& out) {
    std::mt19937_64 rng(2024);
    int yes = 0, no = 0;
    for (int it = 0; it < 200; ++it) {
        const int nv = testgen::pick(rng, 2, 6);
        EqSystem s = random_binary_system(rng, nv, testgen::pick(rng, 2, 12), 0);
        const int x = testgen::pick(rng, 0, nv - 1);
        if (nonempty_intersection_free(s, x)) {
            ++yes;
            if (!derivation_oracle(s, x, 12).nonempty) out.fail("no derivation for claimed nonempty\n" + s.str());
        } else {
            ++no;
            if (derivation_oracle(s, x, 15).nonempty) out.fail("derivation for claimed empty\n" + s.str());
        }
    }
    out.detail << "200 systems, " << yes << " nonempty, " << no << " empty";
}

/// all orders of all subsets of the intersections, each step checked by exact iteration
std::optional<bool> brute_nonempty(const EqSystem& s, int x) {
    EqSystem base;
    base.names = s.names;
    base.index = s.index;
    std::vector<Inclusion> inters;
    for (auto& inc : s.incs) {
        if (inc.kind == Inclusion::Inter) inters.push_back(inc);
        else base.incs.push_back(inc);
    }
    bool inconclusive = false;
    std::function<bool(EqSystem&, std::vector<bool>&)> go = [&](EqSystem& cur, std::vector<bool>& used) {
        auto r = kleene_solve(cur, 20000);
        if (!r.exact) {
            inconclusive = true;
            return false;
        }
        if (!r.values[x].empty()) return true;
        for (std::size_t i = 0; i < inters.size(); ++i) {
            if (used[i] || !r.values[inters[i].y].contains(0)) continue;
            EqSystem next = cur;
            next.add_const(inters[i].x, 0);
            used[i] = true;
            bool ok = go(next, used);
            used[i] = false;
            if (ok) return true;
        }
        return false;
    };
    std::vector<bool> used(inters.size(), false);
    bool found = go(base, used);
    if (!found && inconclusive) return std::nullopt;
    return found;
}

void np_wrapper(Outcome& out) {
    std::mt19937_64 rng(99);
    int yes = 0, no = 0, unknown = 0, brute_gaps = 0;
    for (int it = 0; it < 100; ++it) {
        const int nv = testgen::pick(rng, 2, 6);
        EqSystem s = random_binary_system(rng, nv, testgen::pick(rng, 4, 12), testgen::pick(rng, 1, 3));
        const int x = testgen::pick(rng, 0, nv - 1);
        Verdict v = nonempty(s, x);
        auto bf = brute_nonempty(s, x);
        if (v == Verdict::Unknown) {
            ++unknown;
            out.fail("Unknown verdict\n" + s.str());
            continue;
        }
        if (!bf) {
            ++brute_gaps;
            out.fail("brute force inconclusive\n" + s.str());
            continue;
        }
        (v == Verdict::True ? yes : no)++;
        if ((v == Verdict::True) != *bf) out.fail("disagreement on X" + std::to_string(x) + "\n" + s.str());
    }
    out.detail << "100 systems, " << yes << " nonempty, " << no << " empty, " << unknown << " unknown";
    if (brute_gaps) out.detail << ", " << brute_gaps << " inconclusive brute-force runs";
}

// ── Emptiness routes ──

void two_routes(Outcome& out) {
    std::mt19937_64 rng(7);
    int ne = 0, em = 0;
    double worst = 0;
    for (int it = 0; it < 100; ++it) {
        TrPDA a = testgen::random_trpda(rng, false);
        auto t0 = std::chrono::steady_clock::now();
        auto eq = decide_emptiness(a).verdict;
        double secs = since(t0);
        auto orb = decide_emptiness_orbit(a);
        worst = std::max(worst, secs);
        if (eq != orb) out.fail("instance " + std::to_string(it) + ": " + emptiness_str(eq) + " vs " + emptiness_str(orb));
        if (secs >= 60) out.fail("instance " + std::to_string(it) + " took " + std::to_string(secs) + "s");
        (orb == Emptiness::Nonempty ? ne : em)++;
    }
    out.detail << "100 instances, " << ne << " nonempty, " << em << " empty, slowest equations run " << worst << "s";
}

/// oracle witness at <= 12 steps, replayed through the acceptance check
bool witness(Outcome& out, const std::string& name, const TrPDA& a) {
    auto o = bounded_empty_oracle(a, 12);
    if (!o.nonempty) {
        out.fail(name + ": no oracle witness within 12 steps");
        return false;
    }
    if (accepts(a, o.word, default_max_silent(o.word) + 12) != Tri::True) {
        out.fail(name + ": witness " + print_word(o.word) + " not accepted");
        return false;
    }
    // the shortest run may read nothing; also replay the longest sampled word
    TimedWord longest;
    for (auto& r : sample_accepted(a, 12, 6, 20, 1))
        if (r.word.size() > longest.size()) longest = r.word;
    if (!longest.empty() && accepts(a, longest, default_max_silent(longest) + 12) != Tri::True) {
        out.fail(name + ": sampled word " + print_word(longest) + " not accepted");
        return false;
    }
    out.detail << name << " witness " << print_word(o.word) << ", longest sample " << print_word(longest) << "; ";
    return true;
}

void corpus_examples(Outcome& out) {
    for (auto f : {"pda1.trpda", "pda2.trpda", "counting.trpda"}) {
        TrPDA a = parse_trpda(read_file(data(f)));
        auto v = decide_emptiness(a).verdict;
        if (v != Emptiness::Nonempty) out.fail(std::string(f) + " equations: " + emptiness_str(v));
        if (a.stack.is_timeless() && decide_emptiness_orbit(a) != Emptiness::Nonempty)
            out.fail(std::string(f) + " orbit route not Nonempty");
        witness(out, f, a);
    }
    TrCFG g = parse_trcfg(read_file(data("palindromes.trcfg")));
    if (decide_emptiness_trcfg(g) != Emptiness::Nonempty) out.fail("palindromes.trcfg not Nonempty");
    witness(out, "palindromes.trcfg", trcfg_to_trpda(g));
}

// ── Dense-timed automata ──

const char* kDtCorpus[] = {"dt1_obligation.dtpda", "dt2_restriction.dtpda", "dt3_interval.dtpda",
                           "dt4_window.dtpda", "dt5_two_clocks.dtpda"};

void stack_untiming(Outcome& out) {
    std::size_t checked = 0;
    for (auto f : kDtCorpus) {
        DtPDA a = parse_dtpda(read_file(data(f)));
        DtPDA u = untime_stack(simplify(a));
        auto fwd = dt_sample_words(a, 50, 6, 11);
        auto back = dt_sample_words(u, 50, 6, 12);
        if (fwd.size() < 50 || back.size() < 50) out.fail(std::string(f) + ": fewer than 50 sampled words");
        for (auto& w : fwd)
            if (dt_accepts(u, w) != Tri::True) out.fail(std::string(f) + ": untimed rejects " + print_word(w));
        for (auto& w : back)
            if (dt_accepts(a, w) != Tri::True) out.fail(std::string(f) + ": original rejects " + print_word(w));
        checked += fwd.size() + back.size();
    }
    out.detail << checked << " words over 5 automata";
}

/// move one timestamp while keeping the word monotonic
TimedWord perturb(const TimedWord& w, std::mt19937_64& rng) {
    TimedWord v = w;
    if (v.empty()) return v;
    std::size_t i = testgen::pick(rng, 0, static_cast<int>(v.size()) - 1);
    if (v[i].point.empty()) return v;
    Rational lo = i == 0 ? v[i].point[0] - 3 : v[i - 1].point[0];
    Rational hi = i + 1 == v.size() ? v[i].point[0] + 3 : v[i + 1].point[0];
    Rational t = lo + (hi - lo) * Rational(testgen::pick(rng, 0, 8), 8);
    v[i].point[0] = t;
    return v;
}

void register_translation(Outcome& out) {
    std::size_t words = 0, accepted = 0;
    std::mt19937_64 rng(5);
    auto pipeline = [](const DtPDA& w) {
        DtPDA d = w;
        if (!d.timeless_stack()) d = untime_stack(simplify(d));
        return dtpda_to_trpda(d);
    };
    std::vector<std::pair<std::string, DtPDA>> corpus;
    for (auto f : kDtCorpus) corpus.push_back({f, parse_dtpda(read_file(data(f)))});
    // control with an empty language
    corpus.push_back({"never", parse_dtpda(R"(dtpda {
      clocks x; loc p q; init p; final q;
      rule from=p to=q in=a guard "x < 0" op nop;
    })")});
    for (auto& [name, a] : corpus) {
        DtPDA w = uninitialized_wrapper(a);
        TrPDA t = pipeline(w);
        std::vector<TimedWord> ws = dt_sample_words(w, 25, 6, 21);
        const std::size_t sampled = ws.size();
        for (std::size_t i = 0; ws.size() < 50; ++i) {
            if (sampled == 0) {
                TimedWord r;
                int now = 0;
                for (int k = testgen::pick(rng, 1, 4); k > 0; --k) {
                    now += testgen::pick(rng, 0, 3);
                    r.push_back({w.inputs[testgen::pick(rng, 0, static_cast<int>(w.inputs.size()) - 1)],
                                 Point{Rational(now, 2)}});
                }
                ws.push_back(r);
            } else {
                ws.push_back(perturb(ws[i % sampled], rng));
            }
        }
        for (auto& word : ws) {
            Tri d = dt_accepts(w, word);
            Tri r = accepts(t, word, default_max_silent(word) + 8);
            if (d == Tri::Unknown || r == Tri::Unknown || d != r)
                out.fail(name + ": " + print_word(word) + " dt " + tri_str(d) + " vs registers " + tri_str(r));
            accepted += d == Tri::True;
            ++words;
        }
        auto o = bounded_empty_oracle(dt_exact_trpda(w), 12);
        auto v = decide_emptiness_orbit(t);
        if (o.nonempty ? v != Emptiness::Nonempty : v != Emptiness::Empty)
            out.fail(name + ": pipeline says " + emptiness_str(v) + ", oracle " + (o.nonempty ? "found a run" : "found none"));
        out.detail << name << " " << emptiness_str(v) << "; ";
    }
    out.detail << words << " words, " << accepted << " accepted";
}

// ── Constraints and sets ──

ZoneDNF random_constraint(std::mt19937_64& rng, std::size_t d, int maxc) {
    std::vector<std::string> zs;
    const int nz = testgen::pick(rng, 1, 2);
    for (int z = 0; z < nz; ++z) {
        std::vector<std::string> atoms;
        for (int k = testgen::pick(rng, 1, 2 * static_cast<int>(d)); k > 0; --k) {
            std::size_t i = testgen::pick(rng, 0, static_cast<int>(d) - 1), j = testgen::pick(rng, 0, static_cast<int>(d) - 1);
            if (i == j) j = (i + 1) % d;
            static const char* ops[] = {"<", "<=", "=", ">=", ">"};
            atoms.push_back(testgen::var(i) + " - " + testgen::var(j) + " " + ops[testgen::pick(rng, 0, 4)] + " " +
                            std::to_string(testgen::pick(rng, -maxc, maxc)));
        }
        zs.push_back("(" + testgen::join(atoms) + ")");
    }
    std::string s;
    for (auto& z : zs) s += (s.empty() ? "" : " | ") + z;
    return parse_constraint(s, d);
}

void normal_form_lemma(Outcome& out) {
    std::mt19937_64 rng(31);
    int built = 0, exts = 0;
    std::size_t points = 0;
    while (built < 50) {
        const std::size_t d = testgen::pick(rng, 2, 4);
        ZoneDNF c = random_constraint(rng, d, 8);
        if (c.canonicalize().is_empty()) continue;
        ++built;
        auto comps = normal_form(c);
        for (auto& comp : comps) {
            exts += comp.is_extension();
            bool inside = comp.is_extension() ? zone_subset(comp.zone(), c) : eval_over_minimal(c, comp.base);
            if (!inside) out.fail("component " + comp.str() + " outside " + c.str());
        }
        NFIndex idx(d, comps);
        for (int k = 0; k < 10000; ++k) {
            const Zone& z = c.disjuncts[testgen::pick(rng, 0, static_cast<int>(c.disjuncts.size()) - 1)];
            Point p = z.sample(rng, 12);
            ++points;
            if (!idx.contains(p)) {
                out.fail("point not covered in " + c.str());
                break;
            }
        }
    }
    out.detail << "50 constraints, " << exts << " extension components, " << points << " sampled points";
}

Location random_location(std::mt19937_64& rng, const std::string& label) {
    std::size_t d = testgen::pick(rng, 1, 2);
    return Location{label, d, testgen::random_state_constraint(rng, d)};
}

void decomposition_lemma(Outcome& out) {
    std::mt19937_64 rng(41);
    std::size_t inside = 0, outside = 0;
    for (int it = 0; it < 30; ++it) {
        Location l1 = random_location(rng, "p"), l2 = random_location(rng, "q");
        ZoneDNF X = random_constraint(rng, l1.dim + l2.dim, 3);
        X.canonicalize();
        auto dec = inverse_image(X, l1, l2);
        std::map<Orbit, std::vector<IntervalZ>> by_orbit;
        for (auto& e : dec) by_orbit[e.orbit.orbit].push_back(e.interval);
        for (auto& o : ref_orbits(l1, l2)) {
            auto& ivs = by_orbit[o.orbit];
            for (Int z = -15; z <= 15; ++z) {
                bool claimed = std::any_of(ivs.begin(), ivs.end(), [&](const IntervalZ& iv) { return iv.contains(z); });
                bool real = eval_over_minimal(X, shift_image(o, z));
                (claimed ? inside : outside)++;
                if (claimed != real)
                    out.fail(o.str() + " shift " + std::to_string(z) + (claimed ? " claimed but outside " : " missed in ") + X.str());
            }
        }
    }
    out.detail << "30 sets, " << inside << " pairs inside, " << outside << " outside";
}

void span_lemma(Outcome& out) {
    std::mt19937_64 rng(51);
    int bounded = 0, unbounded = 0;
    for (int it = 0; it < 100; ++it) {
        DefinableSet X;
        const int nl = testgen::pick(rng, 1, 3);
        for (int k = 0; k < nl; ++k) {
            std::size_t d = testgen::pick(rng, 1, 3);
            ZoneDNF c = d == 1 ? ZoneDNF::top(1) : random_constraint(rng, d, 4);
            X.add("l" + std::to_string(k), d, c);
        }
        auto claim = is_orbit_finite(X);
        // look for members whose span exceeds the target
        const Int target = claim ? 2 * *claim + 8 : 1000;
        bool found = false;
        for (auto& l : X.locs)
            for (auto& z : l.constraint.disjuncts)
                for (std::size_t i = 0; i < l.dim && !found; ++i)
                    for (std::size_t j = 0; j < l.dim && !found; ++j) {
                        if (i == j) continue;
                        Zone w = z;
                        w.add(j, i, make_bound(-target, false));  // x_i - x_j >= target
                        if (!w.canonicalize()) continue;
                        auto p = w.witness();
                        found = p && member(X, Element{l.label, *p});
                    }
        (claim ? bounded : unbounded)++;
        if (claim && found) out.fail("members of span " + std::to_string(target) + " despite bound " + std::to_string(*claim));
        if (!claim && !found) out.fail("claimed unbounded but no member of span 1000");
    }
    out.detail << "100 sets, " << bounded << " orbit-finite, " << unbounded << " not";
}

// ── Undecidable extension ──

void minsky(Outcome& out) {
    TrPDA inc3 = encode_minsky(parse_minsky(read_file(data("inc3.mm"))));
    auto o = bounded_empty_oracle(inc3, 20);
    if (!o.nonempty) out.fail("inc3 has no run within 20 steps");
    TrPDA loop = encode_minsky(parse_minsky(read_file(data("loop.mm"))));
    auto l = bounded_empty_oracle(loop, 40);
    if (l.nonempty) out.fail("loop reached its final state");
    out.detail << "inc3 run of " << o.run.size() << " rules; loop explored " << l.nodes << " nodes";
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::pair<std::string, std::function<void(Outcome&)>>> all = {
        {"gadgets", gadgets},
        {"intersection-free-solver", intersection_free_vs_oracle},
        {"np-wrapper", np_wrapper},
        {"two-routes", two_routes},
        {"examples", corpus_examples},
        {"stack-untiming", stack_untiming},
        {"register-translation", register_translation},
        {"normal-form", normal_form_lemma},
        {"decomposition", decomposition_lemma},
        {"span", span_lemma},
        {"minsky", minsky},
    };
    std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (auto& [name, fn] : all) {
        if (!only.empty() && !only.count(name)) continue;
        Outcome out;
        auto t0 = std::chrono::steady_clock::now();
        try {
            fn(out);
        } catch (const std::exception& e) {
            out.fail(std::string("exception: ") + e.what());
        }
        std::cout << (out.pass ? "PASS " : "FAIL ") << name << " (" << since(t0) << "s): " << out.detail.str() << std::endl;
        failed += !out.pass;
    }
    return failed == 0 ? 0 : 1;
}
