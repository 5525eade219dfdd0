#include "tpda/trpda.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "tpda/constraint.hpp"

namespace tpda {

// ── Model ──

std::vector<std::size_t> TrPDA::rule_offsets(const Rule& r) const {
    std::vector<std::size_t> off;
    std::size_t d = 0;
    off.push_back(d);
    d += states.dim_of(r.from);
    for (auto& s : r.pop) {
        off.push_back(d);
        d += stack.dim_of(s);
    }
    off.push_back(d);
    if (r.input) d += input.dim_of(*r.input);
    off.push_back(d);
    d += states.dim_of(r.to);
    for (auto& s : r.push) {
        off.push_back(d);
        d += stack.dim_of(s);
    }
    off.push_back(d);
    return off;
}

std::size_t TrPDA::rule_dim(const Rule& r) const { return rule_offsets(r).back(); }

namespace {

/// conjoin c (over dim k) placed at offset into a zone DNF over dim d
ZoneDNF place(const ZoneDNF& c, std::size_t d, std::size_t offset) {
    std::vector<std::size_t> map(c.dim);
    for (std::size_t k = 0; k < c.dim; ++k) map[k] = offset + k;
    return dnf_embed(c, d, map);
}

} // namespace

ZoneDNF TrPDA::effective_guard(const Rule& r) const {
    auto off = rule_offsets(r);
    const std::size_t d = off.back();
    ZoneDNF g = r.guard;
    std::size_t k = 0;
    auto conj = [&](const DefinableSet& s, const std::string& lbl) {
        g = dnf_and(g, place(s.find(lbl)->constraint, d, off[k++]));
    };
    conj(states, r.from);
    for (auto& s : r.pop) conj(stack, s);
    if (r.input) g = dnf_and(g, place(input.find(*r.input)->constraint, d, off[k]));
    ++k;
    conj(states, r.to);
    for (auto& s : r.push) conj(stack, s);
    return g.canonicalize();
}

void TrPDA::check() const {
    auto need = [](const DefinableSet& s, const std::string& l, const char* what) {
        if (!s.find(l)) throw std::invalid_argument(std::string("unknown ") + what + " label '" + l + "'");
    };
    for (auto& l : initial.locs) {
        need(states, l.label, "state");
        if (l.dim != states.dim_of(l.label)) throw DimensionMismatch("initial location '" + l.label + "' dimension");
    }
    for (auto& l : final.locs) {
        need(states, l.label, "state");
        if (l.dim != states.dim_of(l.label)) throw DimensionMismatch("final location '" + l.label + "' dimension");
    }
    for (std::size_t i = 0; i < rules.size(); ++i) {
        auto& r = rules[i];
        need(states, r.from, "state");
        need(states, r.to, "state");
        for (auto& s : r.pop) need(stack, s, "stack");
        for (auto& s : r.push) need(stack, s, "stack");
        if (r.input) need(input, *r.input, "input");
        if (r.guard.dim != rule_dim(r))
            throw DimensionMismatch("rule " + std::to_string(i) + " constraint has dimension " +
                                    std::to_string(r.guard.dim) + ", expected " + std::to_string(rule_dim(r)));
    }
}

bool TrPDA::is_short_form() const {
    for (auto& r : rules) {
        bool ok = (r.pop.size() == 0 && r.push.size() <= 1) || (r.pop.size() == 1 && r.push.empty());
        if (!ok) return false;
    }
    return true;
}

// ── Classification ──

std::string ClassificationReport::str() const {
    std::ostringstream o;
    auto b = [](const std::optional<Int>& x) { return x ? std::to_string(*x) : std::string("unbounded"); };
    o << "states span " << b(states_bound) << ", input span " << b(input_bound) << ", stack span " << b(stack_bound)
      << "\n";
    o << "stack: " << (timeless_stack ? "timeless" : "timed") << "\n";
    o << "class: " << (orbit_finite_class ? "orbit-finite" : "general") << "\n";
    for (auto& c : certificates) o << "  " << c << "\n";
    return o.str();
}

ClassificationReport validate(const TrPDA& a) {
    a.check();
    ClassificationReport rep;
    std::string cert;
    rep.states_bound = is_orbit_finite(a.states, &cert);
    if (!rep.states_bound) rep.certificates.push_back("state location '" + cert + "' has unbounded span");
    rep.input_bound = is_orbit_finite(a.input, &cert);
    if (!rep.input_bound) rep.certificates.push_back("input location '" + cert + "' has unbounded span");
    rep.stack_bound = is_orbit_finite(a.stack, &cert);
    if (!rep.stack_bound) rep.certificates.push_back("stack location '" + cert + "' has unbounded span");
    rep.timeless_stack = a.stack.is_timeless();
    bool ok = rep.states_bound && rep.input_bound && rep.stack_bound;
    for (std::size_t i = 0; i < a.rules.size(); ++i) {
        auto& r = a.rules[i];
        auto off = a.rule_offsets(r);
        ZoneDNF g = a.effective_guard(r);
        std::size_t lhs_end = off[1 + r.pop.size()];
        std::size_t to_begin = off[2 + r.pop.size()];
        std::vector<std::size_t> lhs, rhs;
        for (std::size_t k = 0; k < lhs_end; ++k) lhs.push_back(k);
        for (std::size_t k = to_begin; k < off.back(); ++k) rhs.push_back(k);
        if (!span_bound(dnf_project(g, lhs))) {
            ok = false;
            rep.certificates.push_back("rule " + std::to_string(i) + " has an orbit-infinite left-hand side");
        }
        if (!span_bound(dnf_project(g, rhs))) {
            ok = false;
            rep.certificates.push_back("rule " + std::to_string(i) + " has an orbit-infinite right-hand side");
        }
    }
    rep.orbit_finite_class = ok;
    return rep;
}

// ── Short form ──

namespace {

/// guard asserting the first n variables equal the next n ones (over dim 2n + extra)
void add_copy(Zone& z, std::size_t a, std::size_t b, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        z.add(a + k, b + k, kLeZero);
        z.add(b + k, a + k, kLeZero);
    }
}

} // namespace

TrPDA to_short_form(const TrPDA& a) {
    auto rep = validate(a);
    if (!rep.orbit_finite_class) throw std::invalid_argument("short form needs an orbit-finite trPDA");
    TrPDA out;
    out.states = a.states;
    out.input = a.input;
    out.stack = a.stack;
    out.initial = a.initial;
    out.final = a.final;
    for (std::size_t ri = 0; ri < a.rules.size(); ++ri) {
        const Rule& r = a.rules[ri];
        bool shaped = (r.pop.size() == 0 && r.push.size() <= 1) || (r.pop.size() == 1 && r.push.empty());
        if (shaped) {
            out.rules.push_back(r);
            continue;
        }
        auto off = a.rule_offsets(r);
        ZoneDNF g = a.effective_guard(r);
        const std::size_t k = r.pop.size(), m = r.push.size();
        const std::size_t to_off = off[2 + k];
        const std::string tag = "~r" + std::to_string(ri);

        auto range = [](std::size_t lo, std::size_t hi) {
            std::vector<std::size_t> v;
            for (std::size_t x = lo; x < hi; ++x) v.push_back(x);
            return v;
        };
        // buffer B_j holds the from registers plus the first j popped symbols
        std::vector<std::string> buf(k + 1);
        buf[0] = r.from;
        for (std::size_t j = 1; j <= k; ++j) {
            buf[j] = tag + ".b" + std::to_string(j);
            out.states.add(buf[j], off[1 + j], dnf_project(g, range(0, off[1 + j])));
        }
        // pending P_j holds the to registers plus pushes j..m (1-based), P_{m+1} = to
        std::vector<std::string> pend(m + 2);
        std::vector<std::vector<std::size_t>> pend_vars(m + 2);
        pend[m + 1] = r.to;
        for (std::size_t j = 1; j <= m; ++j) {
            pend[j] = tag + ".p" + std::to_string(j);
            auto vars = range(to_off, off[3 + k]);
            for (std::size_t t = j; t <= m; ++t) {
                auto more = range(off[2 + k + t], off[3 + k + t]);
                vars.insert(vars.end(), more.begin(), more.end());
            }
            pend_vars[j] = vars;
            out.states.add(pend[j], vars.size(), dnf_project(g, vars));
        }
        // pops
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t dj = off[1 + j], ds = off[2 + j] - off[1 + j];
            Rule p;
            p.from = buf[j];
            p.pop = {r.pop[j]};
            p.to = buf[j + 1];
            p.name = tag + ".pop" + std::to_string(j + 1);
            // vars: from (dj), popped (ds), to (dj + ds)
            const std::size_t d = 2 * (dj + ds);
            Zone z(d);
            add_copy(z, 0, dj + ds, dj + ds);
            p.guard = dnf_and(ZoneDNF{d, {z}}, place(out.states.find(buf[j + 1])->constraint, d, dj + ds));
            p.guard.canonicalize();
            out.rules.push_back(std::move(p));
        }
        // the nop carrying the real constraint, reading the input
        {
            Rule n;
            n.from = buf[k];
            n.input = r.input;
            n.to = m >= 1 ? pend[1] : r.to;
            n.name = tag + ".read";
            // vars: buffer, input, target registers
            std::vector<std::size_t> tgt = m >= 1 ? pend_vars[1] : range(to_off, off[3 + k]);
            std::vector<std::size_t> keep = range(0, to_off);
            keep.insert(keep.end(), tgt.begin(), tgt.end());
            n.guard = dnf_project(g, keep);
            out.rules.push_back(std::move(n));
        }
        // pushes, bottom first
        for (std::size_t j = 1; j <= m; ++j) {
            Rule p;
            p.from = pend[j];
            p.to = pend[j + 1];
            p.push = {r.push[j - 1]};
            p.name = tag + ".push" + std::to_string(j);
            const std::size_t df = pend_vars[j].size();
            const std::size_t ds = a.stack.dim_of(r.push[j - 1]);
            const std::size_t dq = off[3 + k] - to_off;
            const std::size_t dt = df - ds;  // to regs + remaining pushes
            // vars: from = (q', t_j, t_{j+1}..), to = (q', t_{j+1}..), pushed t_j
            const std::size_t d = df + dt + ds;
            Zone z(d);
            add_copy(z, 0, df, dq);                          // q'
            add_copy(z, dq + ds, df + dq, dt - dq);          // remaining pushes
            add_copy(z, dq, df + dt, ds);                    // pushed symbol
            p.guard = ZoneDNF{d, {z}};
            p.guard.canonicalize();
            out.rules.push_back(std::move(p));
        }
    }
    out.check();
    return out;
}

// ── Grammars ──

TrPDA trcfg_to_trpda(const TrCFG& g) {
    TrPDA a;
    a.states.add("i", 0);
    a.states.add("q", 0);
    a.states.add("f", 0);
    a.input = g.alphabet;
    a.stack = g.symbols;
    a.stack.add("_bot", 0);
    a.initial.add("i", 0);
    a.final.add("f", 0);
    auto* st = g.symbols.find(g.start);
    if (!st) throw std::invalid_argument("unknown start symbol '" + g.start + "'");
    a.rules.push_back(Rule{"i", {}, std::nullopt, "q", {"_bot", g.start}, ZoneDNF::top(st->dim), "start"});
    for (std::size_t pi = 0; pi < g.productions.size(); ++pi) {
        const Production& p = g.productions[pi];
        Rule r{"q", {p.lhs}, p.input, "q", {}, ZoneDNF(), "prod" + std::to_string(pi)};
        r.push.assign(p.rhs.rbegin(), p.rhs.rend());
        // guard order lhs, input, rhs1..rhsn -> lhs, input, rhs_n..rhs_1
        std::size_t dl = g.symbols.dim_of(p.lhs), da = p.input ? g.alphabet.dim_of(*p.input) : 0;
        std::vector<std::size_t> sizes, starts;
        std::size_t pos = dl + da;
        for (auto& s : p.rhs) {
            starts.push_back(pos);
            sizes.push_back(g.symbols.dim_of(s));
            pos += sizes.back();
        }
        if (p.guard.dim != pos) throw DimensionMismatch("production " + std::to_string(pi) + " has wrong dimension");
        std::vector<std::size_t> map(pos);
        for (std::size_t k = 0; k < dl + da; ++k) map[k] = k;
        std::size_t at = dl + da;
        for (std::size_t t = p.rhs.size(); t-- > 0;) {
            for (std::size_t k = 0; k < sizes[t]; ++k) map[starts[t] + k] = at + k;
            at += sizes[t];
        }
        r.guard = dnf_embed(p.guard, pos, map).canonicalize();
        a.rules.push_back(std::move(r));
    }
    a.rules.push_back(Rule{"q", {"_bot"}, std::nullopt, "f", {}, ZoneDNF::top(0), "end"});
    a.check();
    return a;
}

bool UntimedCFG::nonempty() const {
    std::vector<bool> prod(nonterminals.size(), false);
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& p : prods) {
            if (prod[p.lhs]) continue;
            if (std::all_of(p.rhs.begin(), p.rhs.end(), [&](int x) { return prod[x]; })) {
                prod[p.lhs] = true;
                changed = true;
            }
        }
    }
    return std::any_of(start.begin(), start.end(), [&](int s) { return prod[s]; });
}

std::string UntimedCFG::str() const {
    std::ostringstream o;
    o << "start:";
    for (int s : start) o << " N" << s;
    o << "\n";
    for (std::size_t k = 0; k < nonterminals.size(); ++k) o << "N" << k << " = " << nonterminals[k] << "\n";
    for (std::size_t k = 0; k < terminals.size(); ++k) o << "T" << k << " = " << terminals[k] << "\n";
    for (auto& p : prods) {
        o << "N" << p.lhs << " ->";
        if (p.terminal >= 0) o << " T" << p.terminal;
        for (int x : p.rhs) o << " N" << x;
        if (p.terminal < 0 && p.rhs.empty()) o << " eps";
        o << "\n";
    }
    return o.str();
}

UntimedCFG trcfg_untiming(const TrCFG& g) {
    UntimedCFG cfg;
    auto sym_orbits = orbits(g.symbols);
    auto in_orbits = orbits(g.alphabet);
    std::map<std::string, std::vector<int>> nts_of, terms_of;
    std::vector<Orbit> nt_orbit, term_orbit;
    for (auto& o : sym_orbits) {
        nts_of[o.label].push_back(static_cast<int>(cfg.nonterminals.size()));
        cfg.nonterminals.push_back(o.str());
        nt_orbit.push_back(o.orbit);
    }
    for (auto& o : in_orbits) {
        terms_of[o.label].push_back(static_cast<int>(cfg.terminals.size()));
        cfg.terminals.push_back(o.str());
        term_orbit.push_back(o.orbit);
    }
    cfg.start = nts_of[g.start];
    for (auto& p : g.productions) {
        // components in guard order
        std::vector<std::pair<bool, std::string>> comps;  // (is_terminal, label)
        comps.push_back({false, p.lhs});
        if (p.input) comps.push_back({true, *p.input});
        for (auto& s : p.rhs) comps.push_back({false, s});
        std::vector<std::size_t> offs;
        std::size_t d = 0;
        for (auto& c : comps) {
            offs.push_back(d);
            d += c.first ? g.alphabet.dim_of(c.second) : g.symbols.dim_of(c.second);
        }
        std::vector<int> choice(comps.size());
        std::function<void(std::size_t, const ZoneDNF&)> rec = [&](std::size_t i, const ZoneDNF& cur) {
            if (cur.is_empty()) return;
            if (i == comps.size()) {
                UntimedCFG::Prod pr;
                pr.lhs = choice[0];
                pr.terminal = p.input ? choice[1] : -1;
                for (std::size_t k = p.input ? 2 : 1; k < comps.size(); ++k) pr.rhs.push_back(choice[k]);
                cfg.prods.push_back(pr);
                return;
            }
            auto& ids = comps[i].first ? terms_of[comps[i].second] : nts_of[comps[i].second];
            for (int id : ids) {
                const Orbit& o = comps[i].first ? term_orbit[id] : nt_orbit[id];
                choice[i] = id;
                ZoneDNF oz{o.dim(), {o.zone()}};
                rec(i + 1, dnf_and(cur, place(oz, d, offs[i])));
            }
        };
        rec(0, p.guard);
    }
    return cfg;
}

// ── Minsky machines ──

MinskyMachine parse_minsky(const std::string& text) {
    MinskyMachine m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok.back() == ':') {
            int idx = std::stoi(tok.substr(0, tok.size() - 1));
            if (idx != static_cast<int>(m.size()))
                throw ParseError("instruction number " + std::to_string(idx) + " out of sequence", lineno, 1);
            if (!(ls >> tok)) throw ParseError("missing instruction", lineno, 1);
        }
        MinskyInstr ins{MinskyInstr::Halt, -1};
        static const std::map<std::string, MinskyInstr::Op> ops = {
            {"inc1", MinskyInstr::Inc1}, {"inc2", MinskyInstr::Inc2}, {"dec1", MinskyInstr::Dec1},
            {"dec2", MinskyInstr::Dec2}, {"jz1", MinskyInstr::Jz1},   {"jz2", MinskyInstr::Jz2},
            {"goto", MinskyInstr::Goto}, {"halt", MinskyInstr::Halt}};
        auto it = ops.find(tok);
        if (it == ops.end()) throw ParseError("unknown instruction '" + tok + "'", lineno, 1);
        ins.op = it->second;
        if (ins.op == MinskyInstr::Jz1 || ins.op == MinskyInstr::Jz2 || ins.op == MinskyInstr::Goto) {
            if (!(ls >> ins.target)) throw ParseError("missing jump target", lineno, 1);
        }
        m.push_back(ins);
    }
    for (auto& i : m)
        if (i.target >= static_cast<int>(m.size())) throw ParseError("jump target out of range", 0, 0);
    return m;
}

TrPDA encode_minsky(const MinskyMachine& m) {
    TrPDA a;
    auto pc = [](std::size_t k) { return "p" + std::to_string(k); };
    a.states.add("init", 1);
    for (std::size_t k = 0; k <= m.size(); ++k) a.states.add(pc(k), 1);
    a.stack.add("bot", 1);
    a.stack.add("top", 1);
    a.initial.add("init", 1);
    for (std::size_t k = 0; k < m.size(); ++k)
        if (m[k].op == MinskyInstr::Halt) a.final.add(pc(k), 1);
    auto rule = [&](const std::string& from, std::vector<std::string> pop, const std::string& to,
                    std::vector<std::string> push, const std::string& c, const std::string& name) {
        Rule r{from, std::move(pop), std::nullopt, to, std::move(push), ZoneDNF(), name};
        r.guard = parse_constraint(c, a.rule_dim(r));
        a.rules.push_back(std::move(r));
    };
    // configuration: state x = t+n1+n2, stack top at t+n1 (bot at t)
    rule("init", {}, pc(0), {"bot"}, "x2 = x3", "init");
    const std::vector<std::string> syms = {"bot", "top"};
    for (std::size_t k = 0; k < m.size(); ++k) {
        const auto& in = m[k];
        std::string here = pc(k), next = pc(k + 1), tgt = in.target >= 0 ? pc(in.target) : "";
        std::string nm = "i" + std::to_string(k);
        switch (in.op) {
            case MinskyInstr::Inc1:
                // vars: x, u, x', s, t
                for (auto& s : syms)
                    rule(here, {s}, next, {s, "top"}, "x3 - x1 = 1 & x4 = x2 & x5 - x2 = 1", nm + ".inc1." + s);
                break;
            case MinskyInstr::Inc2:
                rule(here, {}, next, {}, "x2 - x1 = 1", nm + ".inc2");
                break;
            case MinskyInstr::Dec1:
                rule(here, {"top"}, next, {}, "x3 - x1 = -1", nm + ".dec1");
                break;
            case MinskyInstr::Dec2:
                for (auto& s : syms)
                    rule(here, {s}, next, {s}, "x1 - x2 >= 1 & x3 - x1 = -1 & x4 = x2", nm + ".dec2." + s);
                break;
            case MinskyInstr::Jz1:
                rule(here, {"bot"}, tgt, {"bot"}, "x3 = x1 & x4 = x2", nm + ".jz1.zero");
                rule(here, {"top"}, next, {"top"}, "x3 = x1 & x4 = x2", nm + ".jz1.pos");
                break;
            case MinskyInstr::Jz2:
                for (auto& s : syms) {
                    rule(here, {s}, tgt, {s}, "x1 = x2 & x3 = x1 & x4 = x2", nm + ".jz2.zero." + s);
                    rule(here, {s}, next, {s}, "x1 - x2 >= 1 & x3 = x1 & x4 = x2", nm + ".jz2.pos." + s);
                }
                break;
            case MinskyInstr::Goto:
                rule(here, {}, tgt, {}, "x2 = x1", nm + ".goto");
                break;
            case MinskyInstr::Halt:
                break;
        }
    }
    a.check();
    return a;
}

} // namespace tpda
