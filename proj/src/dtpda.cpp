#include "tpda/dtpda.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

#include "tpda/io.hpp"

namespace tpda {

namespace {

const char* op_str(RelOp op) {
    switch (op) {
        case RelOp::Lt: return "<";
        case RelOp::Le: return "<=";
        case RelOp::Eq: return "=";
        case RelOp::Ge: return ">=";
        case RelOp::Gt: return ">";
        default: return "!=";
    }
}

RelOp flip_op(RelOp op) {
    switch (op) {
        case RelOp::Lt: return RelOp::Gt;
        case RelOp::Le: return RelOp::Ge;
        case RelOp::Ge: return RelOp::Le;
        case RelOp::Gt: return RelOp::Lt;
        default: return op;
    }
}

bool is_upper(RelOp op) { return op == RelOp::Lt || op == RelOp::Le; }

bool holds(Int v, RelOp op, Int k) {
    switch (op) {
        case RelOp::Lt: return v < k;
        case RelOp::Le: return v <= k;
        case RelOp::Eq: return v == k;
        case RelOp::Ge: return v >= k;
        case RelOp::Gt: return v > k;
        default: return v != k;
    }
}

std::string fresh_name(const std::string& base, const std::vector<std::string>& taken) {
    std::string n = base;
    while (std::find(taken.begin(), taken.end(), n) != taken.end()) n += "'";
    return n;
}

} // namespace

// ── Atoms ──

bool DtAtom::operator<(const DtAtom& o) const {
    return std::tie(x, y, op, k) < std::tie(o.x, o.y, o.op, o.k);
}

std::string DtAtom::str() const {
    std::string s = x;
    if (!y.empty()) s += " - " + y;
    return s + " " + op_str(op) + " " + std::to_string(k);
}

std::string constraint_str(const DtConstraint& c) {
    if (c.empty()) return "true";
    std::string s;
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? " & " : "") + c[i].str();
    return s;
}

namespace {

DtConstraint parse_dt_constraint(const Token& tok, const std::vector<std::string>& names) {
    VarResolver res = [&](const std::string& n) -> std::optional<int> {
        auto it = std::find(names.begin(), names.end(), n);
        if (it == names.end()) return std::nullopt;
        return static_cast<int>(it - names.begin());
    };
    AtomDNF d = parse_atoms(tok.text, res, tok.line, tok.col + 1);
    if (d.size() != 1) throw ParseError("clock constraints must be satisfiable conjunctions", tok.line, tok.col);
    DtConstraint c;
    for (auto& a : d[0]) c.push_back({names[a.i], a.j < 0 ? "" : names[a.j], a.op, a.k});
    return c;
}

} // namespace

// ── Model checks ──

bool DtPDA::timeless_stack() const {
    for (auto& r : rules)
        if (r.op.kind == DtOp::Pop && !r.op.psi.empty()) return false;
    return true;
}

Int DtPDA::max_constant() const {
    Int m = 0;
    auto upd = [&](const DtConstraint& c) {
        for (auto& a : c) m = std::max(m, a.k < 0 ? -a.k : a.k);
    };
    for (auto& r : rules) {
        upd(r.guard);
        upd(r.op.psi);
    }
    return m;
}

void DtPDA::check() const {
    auto has = [](const std::vector<std::string>& v, const std::string& s) {
        return std::find(v.begin(), v.end(), s) != v.end();
    };
    if (!has(locs, init)) throw std::invalid_argument("initial location '" + init + "' is not declared");
    for (auto& f : final)
        if (!has(locs, f)) throw std::invalid_argument("final location '" + f + "' is not declared");
    for (auto& r : rules) {
        if (!has(locs, r.from) || !has(locs, r.to)) throw std::invalid_argument("rule uses an undeclared location");
        if (r.input && !has(inputs, *r.input)) throw std::invalid_argument("rule reads an undeclared letter");
        for (auto& x : r.reset)
            if (!has(clocks, x)) throw std::invalid_argument("reset of unknown clock '" + x + "'");
        if (r.op.kind != DtOp::Nop && !has(stack, r.op.sym))
            throw std::invalid_argument("undeclared stack symbol '" + r.op.sym + "'");
        for (auto& a : r.guard)
            if (a.x == "z" || a.y == "z") throw std::invalid_argument("guards cannot mention the stack age");
        if (r.op.kind == DtOp::Push)
            for (auto& a : r.op.psi)
                if (a.x != "z" || !a.y.empty()) throw std::invalid_argument("push constraints range over z only");
    }
}

// ── Text format ──

DtPDA parse_dtpda(const std::string& text) {
    Lexer lx(text);
    DtPDA a;
    lx.expect("dtpda");
    if (lx.peek().kind == Token::Word) lx.next();
    lx.expect("{");
    bool saw_input = false, saw_stack = false;
    auto names = [&](std::vector<std::string>& out) {
        while (!lx.accept(";")) out.push_back(lx.word("name"));
    };
    std::vector<std::pair<DtRule, Token>> pending;
    while (!lx.accept("}")) {
        Token at = lx.peek();
        std::string kw = lx.word("section keyword");
        if (kw == "clocks") {
            names(a.clocks);
        } else if (kw == "loc") {
            names(a.locs);
        } else if (kw == "input") {
            saw_input = true;
            names(a.inputs);
        } else if (kw == "stack") {
            saw_stack = true;
            names(a.stack);
        } else if (kw == "init") {
            a.init = lx.word("location");
            lx.expect(";");
        } else if (kw == "final") {
            std::vector<std::string> f;
            names(f);
            a.final.insert(f.begin(), f.end());
        } else if (kw == "uninit") {
            a.uninitialized = true;
            lx.expect(";");
        } else if (kw == "rule") {
            DtRule r;
            std::vector<std::string> clk = a.clocks, clkz = a.clocks;
            clkz.push_back("z");
            while (!lx.accept(";")) {
                Token ft = lx.peek();
                std::string f = lx.word("rule field");
                if (f == "from" || f == "to" || f == "in") {
                    lx.expect("=");
                    std::string v = lx.word("name");
                    if (f == "from") r.from = v;
                    if (f == "to") r.to = v;
                    if (f == "in" && v != "eps") r.input = v;
                } else if (f == "guard") {
                    if (lx.peek().kind != Token::String) lx.fail("expected quoted guard");
                    r.guard = parse_dt_constraint(lx.next(), clk);
                } else if (f == "reset") {
                    lx.expect("[");
                    while (!lx.accept("]")) {
                        r.reset.push_back(lx.word("clock"));
                        lx.accept(",");
                    }
                } else if (f == "op") {
                    std::string o = lx.word("operation");
                    if (o == "nop") {
                        r.op.kind = DtOp::Nop;
                    } else if (o == "push" || o == "pop") {
                        r.op.kind = o == "push" ? DtOp::Push : DtOp::Pop;
                        lx.expect("(");
                        r.op.sym = lx.word("stack symbol");
                        if (lx.accept(",")) {
                            if (lx.peek().kind != Token::String) lx.fail("expected quoted stack constraint");
                            r.op.psi = parse_dt_constraint(lx.next(), o == "push" ? std::vector<std::string>{"z"} : clkz);
                        } else if (o == "push") {
                            r.op.psi = {{"z", "", RelOp::Eq, 0}};
                        }
                        lx.expect(")");
                    } else {
                        throw ParseError("unknown operation '" + o + "'", ft.line, ft.col);
                    }
                } else {
                    throw ParseError("unknown rule field '" + f + "'", ft.line, ft.col);
                }
            }
            if (r.from.empty() || r.to.empty()) throw ParseError("rule needs from= and to=", at.line, at.col);
            pending.push_back({std::move(r), at});
        } else {
            throw ParseError("unknown section '" + kw + "'", at.line, at.col);
        }
    }
    for (auto& [r, at] : pending) {
        if (!saw_input && r.input && std::find(a.inputs.begin(), a.inputs.end(), *r.input) == a.inputs.end())
            a.inputs.push_back(*r.input);
        if (!saw_stack && r.op.kind != DtOp::Nop &&
            std::find(a.stack.begin(), a.stack.end(), r.op.sym) == a.stack.end())
            a.stack.push_back(r.op.sym);
        a.rules.push_back(std::move(r));
    }
    try {
        a.check();
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), 1, 1);
    }
    return a;
}

std::string print_dtpda(const DtPDA& a) {
    std::ostringstream os;
    auto list = [&](const char* kw, const auto& v) {
        os << "  " << kw;
        for (auto& s : v) os << " " << s;
        os << ";\n";
    };
    os << "dtpda {\n";
    list("clocks", a.clocks);
    list("loc", a.locs);
    list("input", a.inputs);
    list("stack", a.stack);
    os << "  init " << a.init << ";\n";
    list("final", a.final);
    if (a.uninitialized) os << "  uninit;\n";
    for (auto& r : a.rules) {
        os << "  rule from=" << r.from << " to=" << r.to << " in=" << (r.input ? *r.input : "eps");
        if (!r.guard.empty()) os << " guard \"" << constraint_str(r.guard) << "\"";
        if (!r.reset.empty()) {
            os << " reset [";
            for (std::size_t i = 0; i < r.reset.size(); ++i) os << (i ? ", " : "") << r.reset[i];
            os << "]";
        }
        os << " op ";
        if (r.op.kind == DtOp::Nop) os << "nop";
        else os << (r.op.kind == DtOp::Push ? "push(" : "pop(") << r.op.sym << ", \"" << constraint_str(r.op.psi) << "\")";
        os << ";\n";
    }
    os << "}\n";
    return os.str();
}

// ── Exact register encoding ──

namespace {

/// values are `now - base`; adds c_u - c_v op k or c_u op k to z
struct Encoder {
    Zone& z;
    std::size_t now;
    std::map<std::string, std::size_t> base;

    void atom(const DtAtom& a) const {
        std::size_t bu = base.at(a.x);
        if (a.y.empty())
            add_atom(z, static_cast<int>(now), static_cast<int>(bu), a.op, a.k);
        else
            add_atom(z, static_cast<int>(base.at(a.y)), static_cast<int>(bu), a.op, a.k);
    }
    void all(const DtConstraint& c) const {
        for (auto& a : c) atom(a);
    }
};

void eq(Zone& z, std::size_t i, std::size_t j) { add_atom(z, static_cast<int>(i), static_cast<int>(j), RelOp::Eq, 0); }

} // namespace

TrPDA dt_exact_trpda(const DtPDA& a) {
    a.check();
    const std::size_t n = a.clocks.size(), sd = 1 + n;
    TrPDA t;
    t.states.add("~start", 0);
    for (auto& l : a.locs) t.states.add(l, sd);
    t.input.add("~start", 1);
    for (auto& s : a.inputs) t.input.add(s, 1);
    for (auto& s : a.stack) t.stack.add(s, 1);
    t.initial.add("~start", 0);
    for (auto& f : a.final) t.final.add(f, sd);
    {
        Rule r{"~start", {}, "~start", a.init, {}, {}, "start"};
        Zone z(1 + sd);
        for (std::size_t x = 0; x < n; ++x) {
            if (a.uninitialized)
                add_atom(z, 1, static_cast<int>(2 + x), RelOp::Ge, 0);
            else
                eq(z, 2 + x, 0);
        }
        if (!a.uninitialized) eq(z, 1, 0);
        r.guard = ZoneDNF{1 + sd, {z}};
        r.guard.canonicalize();
        t.rules.push_back(std::move(r));
    }
    for (std::size_t ri = 0; ri < a.rules.size(); ++ri) {
        auto& dr = a.rules[ri];
        Rule r;
        r.from = dr.from;
        r.to = dr.to;
        r.input = dr.input;
        r.name = "r" + std::to_string(ri);
        std::size_t pos = sd, pop_b = 0, in_t = 0, push_b = 0;
        if (dr.op.kind == DtOp::Pop) {
            r.pop = {dr.op.sym};
            pop_b = pos++;
        }
        if (dr.input) in_t = pos++;
        std::size_t to = pos;
        pos += sd;
        if (dr.op.kind == DtOp::Push) {
            r.push = {dr.op.sym};
            push_b = pos++;
        }
        Zone z(pos);
        add_atom(z, static_cast<int>(to), 0, RelOp::Ge, 0);
        if (dr.input) eq(z, in_t, to);
        Encoder enc{z, to, {}};
        for (std::size_t x = 0; x < n; ++x) enc.base[a.clocks[x]] = 1 + x;
        enc.all(dr.guard);
        if (dr.op.kind == DtOp::Pop) {
            enc.base["z"] = pop_b;
            enc.all(dr.op.psi);
        }
        if (dr.op.kind == DtOp::Push) {
            enc.base["z"] = push_b;
            enc.all(dr.op.psi);
            add_atom(z, static_cast<int>(to), static_cast<int>(push_b), RelOp::Ge, 0);
        }
        for (std::size_t x = 0; x < n; ++x) {
            bool reset = std::find(dr.reset.begin(), dr.reset.end(), a.clocks[x]) != dr.reset.end();
            eq(z, to + 1 + x, reset ? to : 1 + x);
        }
        r.guard = ZoneDNF{pos, {z}};
        r.guard.canonicalize();
        if (!r.guard.is_empty()) t.rules.push_back(std::move(r));
    }
    return t;
}

Tri dt_accepts(const DtPDA& a, const TimedWord& w, std::size_t max_silent, AcceptStats* stats) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i].point.size() != 1) throw std::invalid_argument("dtPDA letters carry one timestamp");
        if (i && w[i].point[0] < w[i - 1].point[0]) throw NonMonotonicWord("timestamps must be nondecreasing");
    }
    TrPDA t = dt_exact_trpda(a);
    TimedWord w2;
    Rational t0 = 0;
    if (a.uninitialized && !w.empty()) t0 = w[0].point[0];
    w2.push_back({"~start", {t0}});
    w2.insert(w2.end(), w.begin(), w.end());
    return accepts(t, w2, max_silent ? max_silent : default_max_silent(w2), stats);
}

std::vector<TimedWord> dt_sample_words(const DtPDA& a, std::size_t count, std::size_t max_len, std::uint64_t seed,
                                       std::size_t max_steps) {
    TrPDA t = dt_exact_trpda(a);
    std::vector<TimedWord> out;
    std::set<std::string> seen;
    // few skeletons: more points per skeleton on later rounds
    for (std::size_t round = 0, per = 3; round < 4 && out.size() < count; ++round, per *= 3) {
        auto runs = sample_accepted(t, max_steps, max_len + 1, 4 * count, seed + round, per);
        for (auto& r : runs) {
            if (out.size() >= count) break;
            TimedWord w(r.word.begin() + 1, r.word.end());
            if (!a.uninitialized) {
                Rational s = r.word[0].point[0];
                for (auto& e : w) e.point[0] -= s;
            }
            std::string key;
            for (auto& e : w) key += e.str();
            if (seen.insert(key).second) out.push_back(std::move(w));
        }
    }
    return out;
}

// ── Simplification ──

namespace {

/// z in [lo, hi] with strictness; punctual when lo == hi closed
struct AgeInterval {
    Int lo = 0;
    bool lo_strict = false;
    std::optional<Int> hi;
    bool hi_strict = false;
    bool punctual() const { return hi && *hi == lo && !lo_strict && !hi_strict; }
    bool empty() const { return hi && (*hi < lo || (*hi == lo && (lo_strict || hi_strict))); }
    std::string tag() const {
        if (punctual()) return "e" + std::to_string(lo);
        std::string s = (lo_strict ? "o" : "c") + std::to_string(lo) + "_";
        s += hi ? std::to_string(*hi) + (hi_strict ? "o" : "c") : "inf";
        return s;
    }
    bool operator<(const AgeInterval& o) const {
        return std::tie(lo, lo_strict, hi, hi_strict) < std::tie(o.lo, o.lo_strict, o.hi, o.hi_strict);
    }
};

AgeInterval age_interval(const DtConstraint& psi) {
    AgeInterval I;
    auto lower = [&](Int k, bool strict) {
        if (k > I.lo || (k == I.lo && strict)) {
            I.lo = k;
            I.lo_strict = strict;
        }
    };
    auto upper = [&](Int k, bool strict) {
        if (!I.hi || k < *I.hi || (k == *I.hi && strict)) {
            I.hi = k;
            I.hi_strict = strict;
        }
    };
    for (auto& a : psi) {
        if (a.op == RelOp::Ge || a.op == RelOp::Eq) lower(a.k, false);
        if (a.op == RelOp::Gt) lower(a.k, true);
        if (a.op == RelOp::Le || a.op == RelOp::Eq) upper(a.k, false);
        if (a.op == RelOp::Lt) upper(a.k, true);
    }
    return I;
}

/// shift a pop constraint in z - x form by the initial age range; nullopt if unsatisfiable
std::optional<std::pair<DtConstraint, DtConstraint>> update(const DtConstraint& psi, const AgeInterval& I) {
    DtConstraint out, cross;
    if (I.punctual()) {
        for (auto a : psi) {
            a.k = checked_add(a.k, -I.lo);
            out.push_back(a);
        }
        return std::pair{out, cross};
    }
    for (auto a : psi) {
        if (is_upper(a.op)) {
            if (I.lo_strict) a.op = RelOp::Lt;
            a.k = checked_add(a.k, -I.lo);
            out.push_back(a);
        } else {
            if (!I.hi) continue;
            if (I.hi_strict) a.op = RelOp::Gt;
            a.k = checked_add(a.k, -*I.hi);
            out.push_back(a);
        }
    }
    // one initial age has to serve all atoms at once
    for (auto& u : psi) {
        if (!is_upper(u.op)) continue;
        for (auto& l : psi) {
            if (is_upper(l.op)) continue;
            bool strict = u.op == RelOp::Lt || l.op == RelOp::Gt;
            Int k = checked_add(l.k, -u.k);
            if (u.y == l.y) {
                if (strict ? !(0 > k) : !(0 >= k)) return std::nullopt;
                continue;
            }
            cross.push_back({u.y, l.y, strict ? RelOp::Gt : RelOp::Ge, k});
        }
    }
    return std::pair{out, cross};
}

bool push_is_zero(const DtConstraint& psi) {
    AgeInterval I = age_interval(psi);
    return I.punctual() && I.lo == 0;
}

} // namespace

bool is_simplified(const DtPDA& a) {
    for (auto& r : a.rules) {
        if (r.op.kind == DtOp::Nop) continue;
        if (!r.reset.empty()) return false;
        if (r.op.kind == DtOp::Push && !push_is_zero(r.op.psi)) return false;
        if (r.op.kind == DtOp::Pop)
            for (auto& at : r.op.psi)
                if (at.x != "z" || at.y.empty() || at.y == "z" || at.op == RelOp::Eq || at.op == RelOp::Ne)
                    return false;
    }
    return true;
}

DtPDA simplify(const DtPDA& in) {
    in.check();
    DtPDA a = in;
    // pop atoms into z - x form; atoms without z move to the guard
    bool age_tests = false;
    for (auto& r : a.rules) {
        if (r.op.kind != DtOp::Pop) continue;
        DtConstraint psi;
        for (auto at : r.op.psi) {
            if (at.x != "z" && at.y != "z") {
                r.guard.push_back(at);
                continue;
            }
            if (at.y == "z") at = {"z", at.x, flip_op(at.op), checked_neg(at.k)};
            if (at.y.empty()) age_tests = true;
            if (at.op == RelOp::Eq) {
                psi.push_back({at.x, at.y, RelOp::Le, at.k});
                psi.push_back({at.x, at.y, RelOp::Ge, at.k});
            } else {
                psi.push_back(at);
            }
        }
        std::sort(psi.begin(), psi.end());
        psi.erase(std::unique(psi.begin(), psi.end()), psi.end());
        r.op.psi = psi;
    }
    // plain age tests against a clock reset just before the pop
    if (age_tests) {
        std::string x0 = fresh_name("_x0", a.clocks);
        a.clocks.push_back(x0);
        std::vector<DtRule> rules;
        for (std::size_t i = 0; i < a.rules.size(); ++i) {
            DtRule r = a.rules[i];
            bool has = r.op.kind == DtOp::Pop &&
                       std::any_of(r.op.psi.begin(), r.op.psi.end(), [](const DtAtom& t) { return t.y.empty(); });
            if (!has) {
                rules.push_back(r);
                continue;
            }
            std::string mid = fresh_name("~pz" + std::to_string(i), a.locs);
            a.locs.push_back(mid);
            DtRule r1{r.from, mid, r.input, r.guard, {x0}, {}};
            DtRule r2 = r;
            r2.from = mid;
            r2.input.reset();
            r2.guard.push_back({x0, "", RelOp::Eq, 0});
            for (auto& at : r2.op.psi)
                if (at.y.empty()) at.y = x0;
            rules.push_back(r1);
            rules.push_back(r2);
        }
        a.rules = rules;
    }
    // initial ages go onto the stack symbol
    {
        std::map<std::string, std::set<AgeInterval>> variants;
        std::vector<DtRule> kept;
        for (auto& r : a.rules) {
            if (r.op.kind == DtOp::Push) {
                AgeInterval I = age_interval(r.op.psi);
                if (I.empty()) continue;
                variants[r.op.sym].insert(I);
            }
            kept.push_back(r);
        }
        auto renamed = [&](const std::string& s) {
            auto& v = variants[s];
            return !(v.size() == 1 && v.begin()->punctual() && v.begin()->lo == 0);
        };
        auto sym_name = [&](const std::string& s, const AgeInterval& I) { return renamed(s) ? s + "~" + I.tag() : s; };
        std::vector<DtRule> rules;
        for (auto& r : kept) {
            if (r.op.kind == DtOp::Push) {
                DtRule p = r;
                p.op.sym = sym_name(r.op.sym, age_interval(r.op.psi));
                p.op.psi = {{"z", "", RelOp::Eq, 0}};
                rules.push_back(p);
            } else if (r.op.kind == DtOp::Pop) {
                for (auto& I : variants[r.op.sym]) {
                    auto up = update(r.op.psi, I);
                    if (!up) continue;
                    DtRule p = r;
                    p.op.sym = sym_name(r.op.sym, I);
                    p.op.psi = up->first;
                    p.guard.insert(p.guard.end(), up->second.begin(), up->second.end());
                    rules.push_back(p);
                }
            } else {
                rules.push_back(r);
            }
        }
        std::vector<std::string> stack;
        for (auto& s : a.stack) {
            if (!variants.count(s)) {
                stack.push_back(s);
                continue;
            }
            for (auto& I : variants[s]) stack.push_back(sym_name(s, I));
        }
        a.stack = stack;
        a.rules = rules;
    }
    // resets only on nop rules
    bool need = std::any_of(a.rules.begin(), a.rules.end(),
                            [](const DtRule& r) { return r.op.kind != DtOp::Nop && !r.reset.empty(); });
    if (need) {
        std::string xs = fresh_name("_xs", a.clocks);
        a.clocks.push_back(xs);
        std::vector<DtRule> rules;
        for (std::size_t i = 0; i < a.rules.size(); ++i) {
            DtRule r = a.rules[i];
            if (r.op.kind == DtOp::Nop || r.reset.empty()) {
                rules.push_back(r);
                continue;
            }
            std::string m0 = fresh_name("~ps" + std::to_string(i) + ".0", a.locs);
            a.locs.push_back(m0);
            std::string m1 = fresh_name("~ps" + std::to_string(i) + ".1", a.locs);
            a.locs.push_back(m1);
            DtConstraint zero{{xs, "", RelOp::Eq, 0}};
            rules.push_back(DtRule{r.from, m0, r.input, r.guard, {xs}, {}});
            rules.push_back(DtRule{m0, m1, std::nullopt, zero, {}, r.op});
            rules.push_back(DtRule{m1, r.to, std::nullopt, zero, r.reset, {}});
        }
        a.rules = rules;
    }
    return a;
}

// ── Stack untiming ──

namespace {

struct Tuple {
    std::string x;
    RelOp op;
    Int k;
    bool operator<(const Tuple& o) const { return std::tie(x, op, k) < std::tie(o.x, o.op, o.k); }
};

std::string hat_name(const Tuple& t) {
    static const char* nm[] = {"lt", "le", "eq", "ge", "gt", "ne"};
    return "_h." + t.x + "." + nm[static_cast<int>(t.op)] + "." + (t.k < 0 ? "m" + std::to_string(-t.k) : std::to_string(t.k));
}

std::string mask_str(std::uint64_t m) {
    std::string s;
    for (int i = 0; i < 64; ++i)
        if (m >> i & 1) s += (s.empty() ? "" : ".") + std::to_string(i);
    return s;
}

/// all submasks of m
std::vector<std::uint64_t> submasks(std::uint64_t m) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t s = m;; s = (s - 1) & m) {
        out.push_back(s);
        if (s == 0) break;
    }
    return out;
}

} // namespace

DtPDA untime_stack(const DtPDA& a) {
    a.check();
    if (!is_simplified(a)) throw std::invalid_argument("untime_stack needs a simplified automaton");
    std::vector<Tuple> C;
    std::map<Tuple, int> cidx;
    for (auto& r : a.rules)
        if (r.op.kind == DtOp::Pop)
            for (auto& at : r.op.psi) {
                Tuple t{at.y, at.op, at.k};
                if (!cidx.count(t)) {
                    cidx[t] = static_cast<int>(C.size());
                    C.push_back(t);
                }
            }
    if (C.size() > 20) throw std::invalid_argument("too many distinct pop atoms");
    // guessed pop constraints per symbol: -1 means never popped
    std::vector<DtConstraint> psis;
    std::map<std::string, std::set<int>> psi_of;
    auto psi_id = [&](const DtConstraint& c) {
        DtConstraint s = c;
        std::sort(s.begin(), s.end());
        auto it = std::find(psis.begin(), psis.end(), s);
        if (it != psis.end()) return static_cast<int>(it - psis.begin());
        psis.push_back(s);
        return static_cast<int>(psis.size() - 1);
    };
    for (auto& r : a.rules)
        if (r.op.kind == DtOp::Pop) psi_of[r.op.sym].insert(psi_id(r.op.psi));
    auto mask_of = [&](const DtConstraint& c, bool upper) {
        std::uint64_t m = 0;
        for (auto& at : c)
            if (is_upper(at.op) == upper) m |= std::uint64_t(1) << cidx.at(Tuple{at.y, at.op, at.k});
        return m;
    };

    DtPDA u;
    u.clocks = a.clocks;
    for (auto& t : C) u.clocks.push_back(fresh_name(hat_name(t), u.clocks));
    auto hat = [&](int i) { return u.clocks[a.clocks.size() + static_cast<std::size_t>(i)]; };
    u.inputs = a.inputs;
    u.uninitialized = a.uninitialized;

    struct St {
        std::string p;
        std::uint64_t R, O;
        bool operator<(const St& o) const { return std::tie(p, R, O) < std::tie(o.p, o.R, o.O); }
    };
    auto st_name = [](const St& s) { return s.p + "~R" + mask_str(s.R) + "~O" + mask_str(s.O); };
    struct Sym {
        std::string alpha;
        int psi;
        std::uint64_t R, O;
        bool operator<(const Sym& o) const { return std::tie(alpha, psi, R, O) < std::tie(o.alpha, o.psi, o.R, o.O); }
    };
    auto sym_name = [](const Sym& s) {
        return s.alpha + "~c" + (s.psi < 0 ? std::string("n") : std::to_string(s.psi)) + "~R" + mask_str(s.R) + "~O" +
               mask_str(s.O);
    };

    std::set<St> states{St{a.init, 0, 0}};
    std::set<Sym> syms;
    std::set<std::string> rule_keys;
    auto emit = [&](DtRule r) {
        std::string k = r.from + "|" + r.to + "|" + (r.input ? *r.input : "") + "|" + constraint_str(r.guard) + "|" +
                        std::to_string(r.op.kind) + r.op.sym + "|";
        for (auto& x : r.reset) k += x + ",";
        if (rule_keys.insert(k).second) u.rules.push_back(std::move(r));
    };
    auto has_reset = [](const DtRule& r, const std::string& x) {
        return std::find(r.reset.begin(), r.reset.end(), x) != r.reset.end();
    };
    St init{a.init, 0, 0};
    // passes until no state, symbol or rule appears; pops need the symbols pushed so far
    while (true) {
        std::size_t nrules = u.rules.size(), nsyms = syms.size(), nstates = states.size();
        std::vector<St> snapshot(states.begin(), states.end());
        for (auto& s : snapshot) {
            for (auto& r : a.rules) {
                if (r.from != s.p) continue;
                if (r.op.kind == DtOp::Nop) {
                    std::uint64_t dis = 0;
                    for (std::size_t i = 0; i < C.size(); ++i)
                        if ((s.O >> i & 1) && has_reset(r, C[i].x)) dis |= std::uint64_t(1) << i;
                    for (auto Op : submasks(dis)) {
                        DtRule n = r;
                        n.from = st_name(s);
                        for (std::size_t i = 0; i < C.size(); ++i) {
                            // a restricted clock is reset: not too late
                            if ((s.R >> i & 1) && has_reset(r, C[i].x))
                                n.guard.push_back({hat(static_cast<int>(i)), "", C[i].op, C[i].k});
                            // an obligation is discharged: not too early
                            if (Op >> i & 1) n.guard.push_back({hat(static_cast<int>(i)), "", C[i].op, C[i].k});
                        }
                        St t{r.to, s.R, s.O & ~Op};
                        n.to = st_name(t);
                        states.insert(t);
                        emit(n);
                    }
                } else if (r.op.kind == DtOp::Push) {
                    // -1: the symbol stays on the stack for good; a trivial pop guess covers that already
                    std::set<int> ids;
                    if (psi_of.count(r.op.sym)) ids = psi_of[r.op.sym];
                    if (!std::any_of(ids.begin(), ids.end(), [&](int i) { return psis[static_cast<std::size_t>(i)].empty(); }))
                        ids.insert(-1);
                    for (int pid : ids) {
                        DtConstraint psi = pid < 0 ? DtConstraint{} : psis[static_cast<std::size_t>(pid)];
                        std::uint64_t M = mask_of(psi, true), N = mask_of(psi, false);
                        std::uint64_t newM = M & ~s.R;
                        for (auto O0 : submasks(s.O & ~N))
                            for (auto Np : submasks(N)) {
                                DtRule n = r;
                                n.from = st_name(s);
                                n.reset.clear();
                                for (std::size_t i = 0; i < C.size(); ++i) {
                                    const Tuple& c = C[i];
                                    if (newM >> i & 1) {
                                        // -x <~ k at push
                                        n.guard.push_back({c.x, "", flip_op(c.op), checked_neg(c.k)});
                                        n.reset.push_back(hat(static_cast<int>(i)));
                                    }
                                    if (Np >> i & 1) n.guard.push_back({c.x, "", flip_op(c.op), checked_neg(c.k)});
                                    if ((N & ~Np) >> i & 1) n.reset.push_back(hat(static_cast<int>(i)));
                                }
                                // an already satisfied new obligation also settles the equal pending one
                                St t{r.to, s.R | M, (s.O & ~O0 & ~Np) | (N & ~Np)};
                                Sym sy{r.op.sym, pid, s.R, O0};
                                syms.insert(sy);
                                n.op.sym = sym_name(sy);
                                n.to = st_name(t);
                                states.insert(t);
                                emit(n);
                            }
                    }
                } else if (s.O == 0) {
                    int pid = psi_id(r.op.psi);
                    for (auto& sy : syms) {
                        if (sy.alpha != r.op.sym || sy.psi != pid) continue;
                        DtRule n = r;
                        n.from = st_name(s);
                        n.op.sym = sym_name(sy);
                        n.op.psi.clear();
                        St t{r.to, sy.R, sy.O};
                        n.to = st_name(t);
                        states.insert(t);
                        emit(n);
                    }
                }
            }
        }
        if (u.rules.size() == nrules && syms.size() == nsyms && states.size() == nstates) break;
    }
    for (auto& s : states) {
        u.locs.push_back(st_name(s));
        if (a.final.count(s.p)) u.final.insert(st_name(s));
    }
    u.init = st_name(init);
    for (auto& sy : syms) u.stack.push_back(sym_name(sy));
    return u;
}

// ── Uninitialized clocks ──

DtPDA uninitialized_wrapper(const DtPDA& a) {
    a.check();
    if (a.uninitialized) return a;
    DtPDA w = a;
    w.uninitialized = true;
    std::string start = fresh_name("~w0", a.locs);
    w.locs.push_back(start);
    w.init = start;
    for (auto& s : a.inputs) w.rules.push_back(DtRule{start, a.init, s, {}, a.clocks, {}});
    return w;
}

// ── Register translation ──

TrPDA dtpda_to_trpda(const DtPDA& a) {
    a.check();
    if (!a.timeless_stack()) throw std::invalid_argument("dtpda_to_trpda needs a timeless stack; run untime_stack first");
    if (!a.uninitialized) throw std::invalid_argument("dtpda_to_trpda needs uninitialized clocks; run uninitialized_wrapper first");
    for (auto& r : a.rules)
        for (auto& at : r.guard)
            if (!at.y.empty()) throw std::invalid_argument("diagonal guards are not supported by the register translation");
    const std::size_t n = a.clocks.size();
    if (n > 16) throw std::invalid_argument("too many clocks");
    const Int m = a.max_constant();
    using Mask = std::uint32_t;  // set of clocks beyond m
    auto label = [&](const std::string& p, Mask U) {
        std::string s = p + "/";
        bool first = true;
        for (std::size_t x = 0; x < n; ++x)
            if (U >> x & 1) {
                s += (first ? "" : "+") + a.clocks[x];
                first = false;
            }
        return first ? s + "~" : s;
    };
    auto regs = [&](Mask U) {
        std::vector<std::size_t> v;  // clock indices with registers, in order
        for (std::size_t x = 0; x < n; ++x)
            if (!(U >> x & 1)) v.push_back(x);
        return v;
    };
    auto state_zone = [&](Mask U) {
        auto rg = regs(U);
        Zone z(1 + rg.size());
        for (std::size_t i = 0; i < rg.size(); ++i) {
            add_atom(z, 0, static_cast<int>(1 + i), RelOp::Ge, 0);
            add_atom(z, 0, static_cast<int>(1 + i), RelOp::Le, m);
        }
        ZoneDNF d{1 + rg.size(), {z}};
        d.canonicalize();
        return d;
    };
    TrPDA t;
    for (auto& s : a.inputs) t.input.add(s, 1);
    for (auto& s : a.stack) t.stack.add(s, 0);
    std::set<std::pair<std::string, Mask>> seen;
    std::deque<std::pair<std::string, Mask>> work;
    auto visit = [&](const std::string& p, Mask U) {
        if (!seen.insert({p, U}).second) return;
        t.states.add(label(p, U), 1 + regs(U).size(), state_zone(U));
        if (a.final.count(p)) t.final.add(label(p, U), 1 + regs(U).size(), state_zone(U));
        work.push_back({p, U});
    };
    for (Mask U = 0; U < (Mask(1) << n); ++U) {
        visit(a.init, U);
        t.initial.add(label(a.init, U), 1 + regs(U).size(), state_zone(U));
    }
    std::size_t rid = 0;
    while (!work.empty()) {
        auto [p, U] = work.front();
        work.pop_front();
        auto from_regs = regs(U);
        for (std::size_t ri = 0; ri < a.rules.size(); ++ri) {
            auto& dr = a.rules[ri];
            if (dr.from != p) continue;
            Mask reset = 0;
            for (auto& x : dr.reset) reset |= Mask(1) << (std::find(a.clocks.begin(), a.clocks.end(), x) - a.clocks.begin());
            Mask may = 0;  // bounded, not reset: may cross m now
            for (auto x : from_regs)
                if (!(reset >> x & 1)) may |= Mask(1) << x;
            for (Mask V = may;; V = (V - 1) & may) {
                Mask far = U | V;  // clocks known to exceed m at the transition
                bool ok = true;
                for (auto& at : dr.guard) {
                    auto x = static_cast<std::size_t>(std::find(a.clocks.begin(), a.clocks.end(), at.x) - a.clocks.begin());
                    if ((far >> x & 1) && !holds(m + 1, at.op, at.k)) ok = false;
                }
                if (ok) {
                    Mask U2 = far & ~reset;
                    auto to_regs = regs(U2);
                    Rule r;
                    r.from = label(p, U);
                    r.to = label(dr.to, U2);
                    r.input = dr.input;
                    r.name = "r" + std::to_string(ri) + "." + std::to_string(rid++);
                    std::size_t pos = 1 + from_regs.size();
                    if (dr.op.kind == DtOp::Pop) r.pop = {dr.op.sym};
                    std::size_t in_t = pos;
                    if (dr.input) ++pos;
                    std::size_t to = pos;
                    pos += 1 + to_regs.size();
                    if (dr.op.kind == DtOp::Push) r.push = {dr.op.sym};
                    Zone z(pos);
                    add_atom(z, static_cast<int>(to), 0, RelOp::Ge, 0);
                    if (dr.input) eq(z, in_t, to);
                    auto reg_of = [&](std::size_t x) {
                        return 1 + static_cast<std::size_t>(std::find(from_regs.begin(), from_regs.end(), x) - from_regs.begin());
                    };
                    for (auto& at : dr.guard) {
                        auto x = static_cast<std::size_t>(std::find(a.clocks.begin(), a.clocks.end(), at.x) - a.clocks.begin());
                        if (far >> x & 1) continue;
                        add_atom(z, static_cast<int>(to), static_cast<int>(reg_of(x)), at.op, at.k);
                    }
                    for (std::size_t x = 0; x < n; ++x)
                        if (V >> x & 1) add_atom(z, static_cast<int>(to), static_cast<int>(reg_of(x)), RelOp::Gt, m);
                    for (std::size_t i = 0; i < to_regs.size(); ++i) {
                        std::size_t x = to_regs[i];
                        eq(z, to + 1 + i, (reset >> x & 1) ? to : reg_of(x));
                    }
                    r.guard = ZoneDNF{pos, {z}};
                    r.guard.canonicalize();
                    if (!r.guard.is_empty()) {
                        visit(dr.to, U2);
                        t.rules.push_back(std::move(r));
                    }
                }
                if (V == 0) break;
            }
        }
    }
    return t;
}

} // namespace tpda
