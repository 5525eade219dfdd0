#include "tpda/reachability.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace tpda {

namespace {

std::vector<std::size_t> iota_vec(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> v;
    for (std::size_t k = lo; k < hi; ++k) v.push_back(k);
    return v;
}

ZoneDNF place(const ZoneDNF& c, std::size_t d, std::size_t offset) {
    std::vector<std::size_t> map(c.dim);
    for (std::size_t k = 0; k < c.dim; ++k) map[k] = offset + k;
    return dnf_embed(c, d, map);
}

void add_eq(Zone& z, std::size_t i, std::size_t j) {
    z.add(i, j, kLeZero);
    z.add(j, i, kLeZero);
}

Int floor_q(const Rational& q) {
    mpz_class r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    if (!r.fits_slong_p()) throw std::overflow_error("shift bound out of range");
    return r.get_si();
}

Int ceil_q(const Rational& q) {
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    if (!r.fits_slong_p()) throw std::overflow_error("shift bound out of range");
    return r.get_si();
}

} // namespace

// ── Preprocessing ──

TrPDA preprocess(const TrPDA& a0, bool normalize) {
    auto rep = validate(a0);
    if (!rep.orbit_finite_class) {
        std::string why = rep.certificates.empty() ? std::string("unbounded span") : rep.certificates.front();
        throw std::invalid_argument("emptiness needs an orbit-finite trPDA: " + why);
    }
    const TrPDA a = a0.is_short_form() ? a0 : to_short_form(a0);

    TrPDA out;
    std::set<std::string> dummy;
    for (auto& l : a.states.locs) {
        if (l.dim == 0) {
            dummy.insert(l.label);
            out.states.add(l.label, 1);
        } else {
            out.states.add(l.label, l.dim, l.constraint);
        }
    }
    for (auto& lbl : {kInitLoc, kFinalLoc}) {
        if (out.states.find(lbl)) throw std::invalid_argument("location label '" + lbl + "' is reserved");
        out.states.add(lbl, 1);
        dummy.insert(lbl);
    }
    out.stack = a.stack;
    out.initial.add(kInitLoc, 1);
    out.final.add(kFinalLoc, 1);

    auto sdim = [&](const std::string& l) { return out.states.dim_of(l); };
    auto finish = [&](Rule r) {
        r.guard.canonicalize();
        if (normalize && r.guard.dim > 0 && !r.guard.is_empty())
            r.guard = components_to_dnf(r.guard.dim, normal_form(r.guard)).canonicalize();
        out.rules.push_back(std::move(r));
    };

    for (const Rule& r : a.rules) {
        auto off = a.rule_offsets(r);
        ZoneDNF g = a.effective_guard(r);
        const std::size_t k = r.pop.size();
        // drop the input block
        std::vector<std::size_t> keep = iota_vec(0, off[1 + k]);
        for (std::size_t x = off[2 + k]; x < off.back(); ++x) keep.push_back(x);
        g = dnf_project(g, keep);
        // new layout: from, pops, to, pushes with dummies inserted
        const std::size_t nf = off[1] - off[0];
        const std::size_t np = off[1 + k] - off[1];
        const std::size_t nt = off[3 + k] - off[2 + k];
        const std::size_t nq = off.back() - off[3 + k];
        const std::size_t df = sdim(r.from), dt = sdim(r.to);
        const std::size_t d = df + np + dt + nq;
        std::vector<std::size_t> map;
        for (std::size_t x = 0; x < nf; ++x) map.push_back(x);
        for (std::size_t x = 0; x < np; ++x) map.push_back(df + x);
        for (std::size_t x = 0; x < nt; ++x) map.push_back(df + np + x);
        for (std::size_t x = 0; x < nq; ++x) map.push_back(df + np + dt + x);
        Zone pin(d);
        if (dummy.count(r.from) && np > 0) add_eq(pin, 0, df);
        if (dummy.count(r.to) && nq > 0) add_eq(pin, df + np, df + np + dt);
        Rule n = r;
        n.input.reset();
        n.guard = dnf_and(dnf_embed(g, d, map), ZoneDNF{d, {pin}});
        finish(std::move(n));
    }
    // entry and exit
    for (auto& l : a.initial.locs) {
        const std::size_t dl = sdim(l.label);
        Rule r{kInitLoc, {}, std::nullopt, l.label, {}, ZoneDNF::top(1 + dl), "~enter." + l.label};
        if (l.dim > 0) r.guard = dnf_and(r.guard, place(l.constraint, 1 + dl, 1));
        finish(std::move(r));
    }
    for (auto& l : a.final.locs) {
        const std::size_t dl = sdim(l.label);
        Rule r{l.label, {}, std::nullopt, kFinalLoc, {}, ZoneDNF::top(dl + 1), "~exit." + l.label};
        if (l.dim > 0) r.guard = dnf_and(r.guard, place(l.constraint, dl + 1, 0));
        finish(std::move(r));
    }
    for (auto& s : a.stack.locs) {
        const std::size_t d = 1 + s.dim + 1;
        Zone z(d);
        if (s.dim > 0) add_eq(z, 0, 1);
        finish(Rule{kFinalLoc, {s.label}, std::nullopt, kFinalLoc, {}, ZoneDNF{d, {z}}, "~drain." + s.label});
    }
    // dummies may need a fresh value between two pinned rules
    for (auto& l : dummy) finish(Rule{l, {}, std::nullopt, l, {}, ZoneDNF::top(2), "~refresh." + l});
    out.check();
    return out;
}

// ── Reference-pointed orbits ──

Orbit RefOrbit::left() const {
    auto pick = iota_vec(0, n1 + 1);
    return orbit_select(orbit, pick);
}

Orbit RefOrbit::right() const {
    auto pick = iota_vec(n1 + 1, n1 + 2 + n2);
    return orbit_select(orbit, pick);
}

bool RefOrbit::diagonal() const {
    if (l1 != l2 || n1 != n2) return false;
    for (std::size_t k = 0; k < n1; ++k)
        if (!(orbit.interval(k, v2(k)) == Interval{0, false})) return false;
    return true;
}

std::string RefOrbit::str() const {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < n1; ++k) names.push_back("x" + std::to_string(k + 1));
    names.push_back("t");
    for (std::size_t k = 0; k < n2; ++k) names.push_back("y" + std::to_string(k + 1));
    names.push_back("t'");
    return l1 + "," + l2 + ": " + orbit.str(names);
}

bool RefOrbit::operator<(const RefOrbit& o) const {
    return std::tie(l1, l2, orbit) < std::tie(o.l1, o.l2, o.orbit);
}

std::vector<Orbit> dot_orbits(const Location& l) {
    const std::size_t n = l.dim, d = n + 1;
    ZoneDNF c = place(l.constraint, d, 0);
    if (n == 0) return enumerate_orbits(c);
    Zone base(d);
    for (std::size_t i = 0; i < n; ++i) base.add(n, i, make_bound(1, true));
    ZoneDNF ref{d, {}};
    for (std::size_t i = 0; i < n; ++i) {
        Zone z = base;
        z.add(i, n, kLeZero);
        ref.disjuncts.push_back(z);
    }
    return enumerate_orbits(dnf_and(c, ref.canonicalize()));
}

std::vector<RefOrbit> ref_orbits(const Location& l1, const Location& l2) {
    std::vector<RefOrbit> out;
    const std::size_t n1 = l1.dim, n2 = l2.dim;
    auto d1 = dot_orbits(l1), d2 = dot_orbits(l2);
    std::set<Orbit> seen;
    std::vector<std::size_t> pick = iota_vec(0, n1 + 1);
    for (std::size_t k = 0; k < n2; ++k) pick.push_back(n1 + 1 + k);
    pick.push_back(n1);
    for (auto& a : d1)
        for (auto& b : d2)
            for (auto& m : amalgamate(a, b, {{n1, n2}})) seen.insert(orbit_select(m, pick));
    for (auto& o : seen) out.push_back(RefOrbit{l1.label, l2.label, n1, n2, o});
    return out;
}

std::vector<RefOrbit> ref_orbits(const DefinableSet& Q) {
    std::vector<RefOrbit> out;
    for (auto& a : Q.locs)
        for (auto& b : Q.locs) {
            auto part = ref_orbits(a, b);
            out.insert(out.end(), part.begin(), part.end());
        }
    return out;
}

Orbit shift_image(const RefOrbit& o, Int z) {
    auto w = o.orbit.scaled_rep();
    const Int c = std::max(o.orbit.classes(), 1);
    std::vector<Int> sel;
    for (std::size_t k = 0; k < o.n1; ++k) sel.push_back(w[k]);
    for (std::size_t k = 0; k < o.n2; ++k) sel.push_back(checked_add(w[o.v2(k)], checked_mul(z, c)));
    return orbit_of_scaled(sel, c);
}

// ── Decomposition ──

std::string IntervalZ::str() const {
    switch (kind) {
        case Below: return "<" + std::to_string(m);
        case Above: return ">" + std::to_string(m);
        default: return "=" + std::to_string(m);
    }
}

std::optional<IntervalZ> interval_sum(const IntervalZ& a, const IntervalZ& b) {
    using K = IntervalZ::Kind;
    if (a.kind == K::Point) return IntervalZ{b.kind, checked_add(a.m, b.m)};
    if (b.kind == K::Point) return IntervalZ{a.kind, checked_add(a.m, b.m)};
    if (a.kind != b.kind) return std::nullopt;
    // z < m, z' < m'  =>  z + z' <= m + m' - 2
    if (a.kind == K::Below) return IntervalZ{K::Below, checked_add(checked_add(a.m, b.m), -1)};
    return IntervalZ{K::Above, checked_add(checked_add(a.m, b.m), 1)};
}

std::vector<IntervalZ> shifts_into(const RefOrbit& o, const ZoneDNF& X) {
    const std::size_t n1 = o.n1, n2 = o.n2, d = n1 + n2;
    if (X.dim != d) throw DimensionMismatch("set over pairs has the wrong dimension");
    Point rep = o.orbit.rep();
    Point p;
    for (std::size_t k = 0; k < n1; ++k) p.push_back(rep[k]);
    for (std::size_t k = 0; k < n2; ++k) p.push_back(rep[o.v2(k)]);
    // integer ranges [lo, hi], nullopt = unbounded
    using Range = std::pair<std::optional<Int>, std::optional<Int>>;
    std::vector<Range> ranges;
    for (auto& zd : X.disjuncts) {
        if (zd.is_empty()) continue;
        std::optional<Int> lo, hi;
        bool ok = true;
        for (std::size_t i = 0; i < d && ok; ++i)
            for (std::size_t j = 0; j < d && ok; ++j) {
                if (i == j) continue;
                Raw b = zd.at(i, j);
                if (b == kInf) continue;
                const Rational c(bound_value(b));
                const bool strict = bound_strict(b);
                const bool bi = i >= n1, bj = j >= n1;
                Rational d0 = p[i] - p[j];
                if (bi == bj) {
                    ok = strict ? d0 < c : d0 <= c;
                } else if (bi) {
                    Rational r = c - d0;
                    Int h = strict ? ceil_q(r) - 1 : floor_q(r);
                    hi = hi ? std::min(*hi, h) : h;
                } else {
                    Rational r = d0 - c;
                    Int l = strict ? floor_q(r) + 1 : ceil_q(r);
                    lo = lo ? std::max(*lo, l) : l;
                }
            }
        if (!ok) continue;
        if (lo && hi && *lo > *hi) continue;
        ranges.push_back({lo, hi});
    }
    // merge
    std::sort(ranges.begin(), ranges.end(), [](const Range& a, const Range& b) {
        if (!a.first) return b.first.has_value();
        if (!b.first) return false;
        return *a.first < *b.first;
    });
    std::vector<Range> merged;
    for (auto& r : ranges) {
        if (!merged.empty()) {
            auto& m = merged.back();
            bool touch = !m.second || !r.first || *r.first <= *m.second + 1;
            if (touch) {
                if (m.second && (!r.second || *r.second > *m.second)) m.second = r.second;
                continue;
            }
        }
        merged.push_back(r);
    }
    std::vector<IntervalZ> out;
    for (auto& [lo, hi] : merged) {
        if (!lo && !hi) {
            out.push_back({IntervalZ::Below, 0});
            out.push_back({IntervalZ::Point, 0});
            out.push_back({IntervalZ::Above, 0});
        } else if (!lo) {
            out.push_back({IntervalZ::Below, checked_add(*hi, 1)});
        } else if (!hi) {
            out.push_back({IntervalZ::Above, checked_add(*lo, -1)});
        } else {
            if (*hi - *lo > 100000) throw std::overflow_error("decomposition has too many points");
            for (Int z = *lo; z <= *hi; ++z) out.push_back({IntervalZ::Point, z});
        }
    }
    return out;
}

std::vector<DecompEntry> inverse_image(const ZoneDNF& X, const std::vector<RefOrbit>& candidates) {
    std::vector<DecompEntry> out;
    for (auto& o : candidates) {
        if (o.n1 + o.n2 != X.dim) continue;
        for (auto& iv : shifts_into(o, X)) out.push_back({o, iv});
    }
    return out;
}

std::vector<DecompEntry> inverse_image(const ZoneDNF& X, const Location& l1, const Location& l2) {
    return inverse_image(X, ref_orbits(l1, l2));
}

// ── Equation systems ──

std::string EquationBuild::header() const {
    std::ostringstream os;
    os << "# variables for reference-pointed orbits (x = first state, y = second, t = reference point)\n";
    for (auto& [v, o] : orbit_of_var) os << "# " << system.names[v] << " = " << o.str() << "\n";
    os << "# initial-final:";
    for (int v : initial_final) os << " " << system.names[v];
    os << "\n# inclusions: base " << n_base << ", nop " << n_nop << ", transitivity " << n_trans
       << ", timeless push-pop " << n_timeless << ", timed push-pop " << n_timed << "\n";
    return os.str();
}

namespace {

using LocKey = std::pair<std::string, Orbit>;

/// glue o12 = (v1,t,v2,t) and o23 = (v2,t,v3,t) into orbits of (v1,t,v2,t,v3)
std::vector<Orbit> glue_pair(const RefOrbit& a, const Orbit& aorb, std::size_t a_t, std::size_t a_mid,
                             const RefOrbit& b) {
    std::vector<std::pair<std::size_t, std::size_t>> shared;
    for (std::size_t k = 0; k < b.n1; ++k) shared.push_back({a_mid + k, k});
    shared.push_back({a_t, b.t1()});
    shared.push_back({a_t, b.t2()});
    (void)a;
    return amalgamate(aorb, b.orbit, shared);
}

class Builder {
public:
    explicit Builder(const TrPDA& pre) : a_(pre) {}

    EquationBuild run();

private:
    const TrPDA& a_;
    EquationBuild out_;
    std::map<RefOrbit, int> vars_;
    std::set<RefOrbit> derived_;
    std::deque<RefOrbit> queue_;
    std::set<std::tuple<int, int, int, int>> seen_incs_;
    std::map<LocKey, std::vector<RefOrbit>> by_left_, by_right_;
    std::map<std::pair<std::string, std::string>, std::vector<RefOrbit>> ref_cache_;
    // timeless symbol -> (location, dot orbit) -> entries
    std::map<std::string, std::map<LocKey, std::vector<DecompEntry>>> push_right_, pop_left_;
    // bar orbit -> (bar shift, target entries)
    std::map<RefOrbit, std::vector<std::pair<Int, std::vector<DecompEntry>>>> timed_;
    std::map<std::pair<RefOrbit, Int>, int> inter_vars_;
    std::map<std::pair<std::string, RefOrbit>, int> pending_;
    int aux_ = 0;

    const std::vector<RefOrbit>& refs(const std::string& l1, const std::string& l2) {
        auto key = std::make_pair(l1, l2);
        auto it = ref_cache_.find(key);
        if (it != ref_cache_.end()) return it->second;
        return ref_cache_[key] = ref_orbits(*a_.states.find(l1), *a_.states.find(l2));
    }

    int var(const RefOrbit& o) {
        auto it = vars_.find(o);
        if (it != vars_.end()) return it->second;
        int v = out_.system.var("X" + std::to_string(vars_.size()));
        vars_.emplace(o, v);
        out_.orbit_of_var.emplace(v, o);
        return v;
    }

    int interval_var(const std::optional<IntervalZ>& iv) {
        if (!iv) return out_.system.gadget_all();
        switch (iv->kind) {
            case IntervalZ::Below: return out_.system.gadget_lt(iv->m);
            case IntervalZ::Above: return out_.system.gadget_gt(iv->m);
            default: return out_.system.gadget_eq(iv->m);
        }
    }

    /// V over (v1, t, v3) with s still on the stack; first use glues it with every matching pop
    int pending_var(const std::string& s, const RefOrbit& o13) {
        auto key = std::make_pair(s, o13);
        auto it = pending_.find(key);
        if (it != pending_.end()) return it->second;
        int v = out_.system.var("V" + std::to_string(pending_.size()));
        pending_.emplace(key, v);
        auto& pl = pop_left_.at(s).at({o13.l2, o13.right()});
        for (auto& e34 : pl) {
            const RefOrbit& o34 = e34.orbit;
            int z = interval_var(e34.interval);
            for (auto& Q : glue_pair(o13, o13.orbit, o13.t1(), o13.n1 + 1, o34)) {
                std::vector<std::size_t> pick = iota_vec(0, o13.n1 + 1);
                for (std::size_t q = 0; q < o34.n2; ++q) pick.push_back(o13.orbit.dim() + q);
                pick.push_back(o13.n1);
                RefOrbit o14{o13.l1, o34.l2, o13.n1, o34.n2, orbit_select(Q, pick)};
                emit_add(o14, v, z, out_.n_timeless);
            }
        }
        return v;
    }

    bool fresh_inc(int kind, int x, int y, int z) { return seen_incs_.insert({kind, x, y, z}).second; }

    void derive(const RefOrbit& o) {
        if (derived_.insert(o).second) queue_.push_back(o);
    }

    void emit_add(const RefOrbit& target, int y, int z, std::size_t& counter) {
        int x = var(target);
        if (fresh_inc(2, x, y, z)) {
            out_.system.add_add(x, y, z);
            ++counter;
        }
        derive(target);
    }

    std::vector<DecompEntry> decompose(const ZoneDNF& X, const std::string& l1, const std::string& l2) {
        return inverse_image(X, refs(l1, l2));
    }

    void seed();
    void prepare_timeless();
    void prepare_timed();
    void process(const RefOrbit& k);
    void compose(const RefOrbit& a, const RefOrbit& b);
};

void Builder::seed() {
    for (auto& l : a_.states.locs) {
        for (auto& d : dot_orbits(l)) {
            std::vector<std::size_t> pick = iota_vec(0, l.dim + 1);
            auto again = iota_vec(0, l.dim + 1);
            pick.insert(pick.end(), again.begin(), again.end());
            RefOrbit o{l.label, l.label, l.dim, l.dim, orbit_select(d, pick)};
            int x = var(o);
            if (fresh_inc(0, x, 0, 0)) {
                out_.system.add_const(x, 0);
                ++out_.n_base;
            }
            derive(o);
        }
    }
    std::map<std::pair<std::string, std::string>, ZoneDNF> nops;
    for (auto& r : a_.rules) {
        if (!r.pop.empty() || !r.push.empty()) continue;
        auto key = std::make_pair(r.from, r.to);
        ZoneDNF g = a_.effective_guard(r);
        auto it = nops.find(key);
        if (it == nops.end()) nops.emplace(key, g);
        else it->second = dnf_or(it->second, g);
    }
    for (auto& [key, g] : nops) {
        g.canonicalize();
        for (auto& e : decompose(g, key.first, key.second)) {
            int x = var(e.orbit);
            int zi = interval_var(e.interval);
            if (fresh_inc(1, x, zi, -1)) {
                out_.system.add_copy(x, zi);
                ++out_.n_nop;
            }
            derive(e.orbit);
        }
    }
}

void Builder::prepare_timeless() {
    std::map<std::tuple<std::string, std::string, std::string>, ZoneDNF> push, pop;
    auto acc = [](auto& m, auto key, const ZoneDNF& g) {
        auto it = m.find(key);
        if (it == m.end()) m.emplace(key, g);
        else it->second = dnf_or(it->second, g);
    };
    for (auto& r : a_.rules) {
        if (r.push.size() == 1 && a_.stack.dim_of(r.push[0]) == 0)
            acc(push, std::make_tuple(r.push[0], r.from, r.to), a_.effective_guard(r));
        if (r.pop.size() == 1 && a_.stack.dim_of(r.pop[0]) == 0)
            acc(pop, std::make_tuple(r.pop[0], r.from, r.to), a_.effective_guard(r));
    }
    for (auto& [key, g] : push) {
        auto& [s, l1, l2] = key;
        g.canonicalize();
        for (auto& e : decompose(g, l1, l2)) push_right_[s][{l2, e.orbit.right()}].push_back(e);
    }
    for (auto& [key, g] : pop) {
        auto& [s, l1, l2] = key;
        g.canonicalize();
        for (auto& e : decompose(g, l1, l2)) pop_left_[s][{l1, e.orbit.left()}].push_back(e);
    }
}

void Builder::prepare_timed() {
    // per timed symbol: push guards keyed by (from, to), pop guards keyed by (from, to)
    struct Side {
        std::map<std::pair<std::string, std::string>, ZoneDNF> guards;
    };
    std::map<std::string, Side> push, pop;
    auto acc = [](Side& s, const std::pair<std::string, std::string>& key, const ZoneDNF& g) {
        auto it = s.guards.find(key);
        if (it == s.guards.end()) s.guards.emplace(key, g);
        else it->second = dnf_or(it->second, g);
    };
    for (auto& r : a_.rules) {
        if (r.push.size() == 1 && a_.stack.dim_of(r.push[0]) > 0)
            acc(push[r.push[0]], {r.from, r.to}, a_.effective_guard(r));
        if (r.pop.size() == 1 && a_.stack.dim_of(r.pop[0]) > 0)
            acc(pop[r.pop[0]], {r.from, r.to}, a_.effective_guard(r));
    }
    auto dim = [&](const std::string& l) { return a_.states.dim_of(l); };
    for (auto& [s, ps] : push) {
        auto pit = pop.find(s);
        if (pit == pop.end()) continue;
        const std::size_t ns = a_.stack.dim_of(s);
        // rhs of pushes per target location, lhs of pops per source location
        std::map<std::string, ZoneDNF> rhs, lhs;
        for (auto& [key, g] : ps.guards) {
            const std::size_t nf = dim(key.first), nt = dim(key.second);
            ZoneDNF p = dnf_project(g, iota_vec(nf, nf + nt + ns));
            auto it = rhs.find(key.second);
            if (it == rhs.end()) rhs.emplace(key.second, p);
            else it->second = dnf_or(it->second, p);
        }
        for (auto& [key, g] : pit->second.guards) {
            const std::size_t nf = dim(key.first);
            ZoneDNF p = dnf_project(g, iota_vec(0, nf + ns));
            auto it = lhs.find(key.first);
            if (it == lhs.end()) lhs.emplace(key.first, p);
            else it->second = dnf_or(it->second, p);
        }
        for (auto& [lb, rz] : rhs) {
            auto rorbs = enumerate_orbits(rz.canonicalize());
            const std::size_t nb = dim(lb);
            for (auto& [lb2, lz] : lhs) {
                auto lorbs = enumerate_orbits(lz.canonicalize());
                const std::size_t nb2 = dim(lb2);
                std::set<Orbit> glued;
                std::vector<std::pair<std::size_t, std::size_t>> shared;
                for (std::size_t k = 0; k < ns; ++k) shared.push_back({nb + k, nb2 + k});
                for (auto& A : rorbs)
                    for (auto& B : lorbs)
                        for (auto& O : amalgamate(A, B, shared)) glued.insert(O);
                // O over (qbar, s, qbar')
                for (auto& O : glued) {
                    const std::size_t dO = nb + ns + nb2;
                    std::vector<std::size_t> p12 = iota_vec(0, nb);
                    for (std::size_t k = 0; k < nb2; ++k) p12.push_back(nb + ns + k);
                    Orbit o12 = orbit_select(O, p12);
                    auto bars = decompose(ZoneDNF{nb + nb2, {o12.zone()}}, lb, lb2);
                    if (bars.empty()) continue;
                    // X_O per (from of push, to of pop)
                    std::map<std::pair<std::string, std::string>, ZoneDNF> xo;
                    for (auto& [pk, pg] : ps.guards) {
                        if (pk.second != lb) continue;
                        for (auto& [qk, qg] : pit->second.guards) {
                            if (qk.first != lb2) continue;
                            const std::size_t nl = dim(pk.first), nl2 = dim(qk.second);
                            const std::size_t D = nl + dO + nl2;
                            ZoneDNF g = place(pg, D, 0);
                            std::vector<std::size_t> m2;
                            for (std::size_t k = 0; k < nb2; ++k) m2.push_back(nl + nb + ns + k);
                            for (std::size_t k = 0; k < ns; ++k) m2.push_back(nl + nb + k);
                            for (std::size_t k = 0; k < nl2; ++k) m2.push_back(nl + dO + k);
                            g = dnf_and(g, dnf_embed(qg, D, m2));
                            g = dnf_and(g, place(ZoneDNF{dO, {O.zone()}}, D, nl));
                            g.canonicalize();
                            if (g.is_empty()) continue;
                            std::vector<std::size_t> keep = iota_vec(0, nl);
                            for (std::size_t k = 0; k < nl2; ++k) keep.push_back(nl + dO + k);
                            ZoneDNF pr = dnf_project(g, keep);
                            auto key = std::make_pair(pk.first, qk.second);
                            auto it = xo.find(key);
                            if (it == xo.end()) xo.emplace(key, pr);
                            else it->second = dnf_or(it->second, pr);
                        }
                    }
                    std::vector<DecompEntry> targets;
                    for (auto& [key, X] : xo) {
                        X.canonicalize();
                        if (X.is_empty()) continue;
                        auto es = decompose(X, key.first, key.second);
                        targets.insert(targets.end(), es.begin(), es.end());
                    }
                    if (targets.empty()) continue;
                    for (auto& b : bars) {
                        if (b.interval.kind != IntervalZ::Point)
                            throw std::logic_error("inverse image of a single orbit must be finite");
                        timed_[b.orbit].push_back({b.interval.m, targets});
                    }
                }
            }
        }
    }
}

void Builder::compose(const RefOrbit& a, const RefOrbit& b) {
    for (auto& m : glue_pair(a, a.orbit, a.t1(), a.n1 + 1, b)) {
        const std::size_t base = a.orbit.dim();
        std::vector<std::size_t> pick = iota_vec(0, a.n1 + 1);
        for (std::size_t k = 0; k < b.n2; ++k) pick.push_back(base + k);
        pick.push_back(a.n1);
        RefOrbit o13{a.l1, b.l2, a.n1, b.n2, orbit_select(m, pick)};
        emit_add(o13, var(a), var(b), out_.n_trans);
    }
}

void Builder::process(const RefOrbit& k) {
    LocKey lk{k.l1, k.left()}, rk{k.l2, k.right()};
    by_left_[lk].push_back(k);
    by_right_[rk].push_back(k);
    // transitivity, with k first and with k second
    {
        auto it = by_left_.find(rk);
        if (it != by_left_.end()) {
            auto partners = it->second;
            for (auto& b : partners) compose(k, b);
        }
    }
    {
        auto it = by_right_.find(lk);
        if (it != by_right_.end()) {
            auto partners = it->second;
            for (auto& a : partners) compose(a, k);
        }
    }
    // timeless push-pop with k in the middle, split through a pending-symbol variable
    for (auto& [s, pr] : push_right_) {
        auto pit = pr.find(lk);
        if (pit == pr.end()) continue;
        auto qit = pop_left_.find(s);
        if (qit == pop_left_.end() || !qit->second.count(rk)) continue;
        for (auto& e12 : pit->second) {
            const RefOrbit& o12 = e12.orbit;
            int z = interval_var(e12.interval);
            for (auto& T : glue_pair(o12, o12.orbit, o12.t1(), o12.n1 + 1, k)) {
                std::vector<std::size_t> pick = iota_vec(0, o12.n1 + 1);
                for (std::size_t q = 0; q < k.n2; ++q) pick.push_back(o12.orbit.dim() + q);
                pick.push_back(o12.n1);
                RefOrbit o13{o12.l1, k.l2, o12.n1, k.n2, orbit_select(T, pick)};
                int v = pending_var(s, o13);
                if (fresh_inc(3, v, var(k), z)) {
                    out_.system.add_add(v, var(k), z);
                    ++out_.n_timeless;
                }
            }
        }
    }
    // timed push-pop with k as the bar orbit
    auto tit = timed_.find(k);
    if (tit != timed_.end()) {
        for (auto& [zbar, targets] : tit->second) {
            auto key = std::make_pair(k, zbar);
            int w;
            auto wit = inter_vars_.find(key);
            if (wit != inter_vars_.end()) {
                w = wit->second;
            } else {
                int id = aux_++;
                int y = out_.system.var("Y" + std::to_string(id));
                w = out_.system.var("W" + std::to_string(id));
                out_.system.add_add(y, var(k), out_.system.gadget_eq(checked_neg(zbar)));
                out_.system.add_inter(w, y);
                inter_vars_.emplace(key, w);
            }
            for (auto& e : targets) emit_add(e.orbit, w, interval_var(e.interval), out_.n_timed);
        }
    }
}

EquationBuild Builder::run() {
    for (auto& l : a_.states.locs)
        if (l.dim == 0) throw std::invalid_argument("equations need every state timed; run preprocess first");
    if (a_.initial.locs.size() != 1 || a_.final.locs.size() != 1)
        throw std::invalid_argument("equations need a single initial and final location; run preprocess first");
    if (!a_.is_short_form()) throw std::invalid_argument("equations need the short form");
    seed();
    prepare_timeless();
    prepare_timed();
    while (!queue_.empty()) {
        RefOrbit k = queue_.front();
        queue_.pop_front();
        process(k);
    }
    for (auto& o : refs(a_.initial.locs[0].label, a_.final.locs[0].label)) out_.initial_final.push_back(var(o));
    return std::move(out_);
}

} // namespace

EquationBuild build_equations(const TrPDA& pre) {
    pre.check();
    Builder b(pre);
    return b.run();
}

std::string emptiness_str(Emptiness e) {
    switch (e) {
        case Emptiness::Empty: return "Empty";
        case Emptiness::Nonempty: return "Nonempty";
        default: return "Unknown";
    }
}

EmptinessReport decide_emptiness(const TrPDA& a, std::size_t budget) {
    TrPDA pre = preprocess(a, false);
    EquationBuild eb = build_equations(pre);
    EmptinessReport rep;
    rep.variables = eb.system.names.size();
    rep.inclusions = eb.system.incs.size();
    rep.intersection_free = eb.system.intersection_free();
    bool unknown = false;
    for (int x : eb.initial_final) {
        Verdict v = nonempty(eb.system, x, budget);
        if (v == Verdict::True) {
            rep.verdict = Emptiness::Nonempty;
            return rep;
        }
        if (v == Verdict::Unknown) unknown = true;
    }
    rep.verdict = unknown ? Emptiness::Unknown : Emptiness::Empty;
    return rep;
}

// ── Orbit-graph route ──

namespace {

/// same-level summaries from entry states; out(q) may discover new states
template <class Out, class Final>
bool same_level_search(const std::vector<int>& initial, Out&& out, Final&& is_final) {
    std::vector<std::set<int>> R;
    struct Caller {
        int entry, push;
    };
    std::vector<std::vector<Caller>> callers;
    std::vector<bool> is_entry;
    auto grow = [&](int q) {
        if (q >= static_cast<int>(R.size())) {
            R.resize(q + 1);
            callers.resize(q + 1);
            is_entry.resize(q + 1, false);
        }
    };
    std::deque<std::pair<int, int>> work;
    auto add = [&](int e, int q) {
        grow(q);
        if (R[e].insert(q).second) work.push_back({e, q});
    };
    auto entry = [&](int e) {
        grow(e);
        if (!is_entry[e]) {
            is_entry[e] = true;
            add(e, e);
        }
    };
    for (int i : initial) entry(i);
    while (!work.empty()) {
        // depth first: accepting runs tend to be short, the graph is not
        auto [e, q] = work.back();
        work.pop_back();
        if (is_final(q)) return true;
        // copy: out() may grow the cache it returns from
        const std::vector<UntimedPDA::Trans> ts = out(q);
        for (auto& t : ts) {
            if (t.pop >= 0) {
                // returning from e: match every caller that pushed the same symbol
                for (auto c : std::vector<Caller>(callers[e]))
                    if (c.push == t.pop) add(c.entry, t.to);
            } else if (t.push >= 0) {
                entry(t.to);
                callers[t.to].push_back(Caller{e, t.push});
                for (int q2 : std::vector<int>(R[t.to].begin(), R[t.to].end()))
                    for (auto& u : out(q2))
                        if (u.pop == t.push) add(e, u.to);
            } else {
                add(e, t.to);
            }
        }
    }
    return false;
}

} // namespace

bool UntimedPDA::nonempty() const {
    std::vector<std::vector<Trans>> out_of(states.size());
    for (auto& t : trans) out_of[t.from].push_back(t);
    std::set<int> fin(final.begin(), final.end());
    return same_level_search(
        initial, [&](int q) -> const std::vector<Trans>& { return out_of[q]; },
        [&](int q) { return fin.count(q) > 0; });
}

std::string UntimedPDA::str() const {
    std::ostringstream os;
    os << "initial:";
    for (int i : initial) os << " P" << i;
    os << "\nfinal:";
    for (int f : final) os << " P" << f;
    os << "\n";
    for (std::size_t k = 0; k < states.size(); ++k) os << "P" << k << " = " << states[k] << "\n";
    for (std::size_t k = 0; k < letters.size(); ++k) os << "T" << k << " = " << letters[k] << "\n";
    for (auto& t : trans) {
        os << "P" << t.from << " -";
        os << (t.letter >= 0 ? "T" + std::to_string(t.letter) : std::string("eps"));
        if (t.pop >= 0) os << " pop " << stack[t.pop];
        if (t.push >= 0) os << " push " << stack[t.push];
        os << "-> P" << t.to << "\n";
    }
    return os.str();
}

namespace {

/// orbit graph of a short-form trPDA with timeless stack, built on demand
class OrbitGraph {
public:
    explicit OrbitGraph(const TrPDA& a) : a_(a) {
        for (auto& o : orbits(a_.input)) {
            le_id_.emplace(o, static_cast<int>(letters_.size()));
            letters_.push_back(o);
        }
        for (auto& s : a_.stack.locs) {
            sym_.emplace(s.label, static_cast<int>(stack_.size()));
            stack_.push_back(s.label);
        }
        for (auto& r : a_.rules) {
            ZoneDNF g = a_.effective_guard(r);
            if (g.canonicalize().is_empty()) continue;
            rules_from_[r.from].push_back({&r, std::move(g)});
        }
        // a virtual start node stands for the whole initial set; its orbits are never listed
        initial_.push_back(state(LocOrbit{"", Orbit{}}));
    }

    const std::vector<int>& initial() const { return initial_; }
    std::size_t size() const { return states_.size(); }
    const LocOrbit& orbit(int q) const { return *states_[q]; }
    const std::vector<LocOrbit>& letters() const { return letters_; }
    const std::vector<std::string>& stack() const { return stack_; }

    bool is_final(int q) const {
        const LocOrbit& o = *states_[q];
        if (q == kStart) {
            for (auto& l : a_.initial.locs)
                if (const Location* fl = a_.final.find(l.label)) {
                    ZoneDNF both = dnf_and(l.constraint, fl->constraint);
                    if (!both.canonicalize().is_empty()) return true;
                }
            return false;
        }
        const Location* fl = a_.final.find(o.label);
        return fl && (o.orbit.dim() == 0 || eval_over_minimal(fl->constraint, o.orbit));
    }

    const std::vector<UntimedPDA::Trans>& out(int q) {
        if (static_cast<std::size_t>(q) >= out_.size()) out_.resize(states_.size());
        if (!done_[q]) expand(q);
        return out_[q];
    }

private:
    struct GuardedRule {
        const Rule* rule;
        ZoneDNF guard;
    };
    static constexpr int kStart = 0;
    const TrPDA& a_;
    std::map<LocOrbit, int> st_id_, le_id_;
    std::vector<const LocOrbit*> states_;
    std::vector<LocOrbit> letters_;
    std::vector<std::string> stack_;
    std::map<std::string, int> sym_;
    std::map<std::string, std::vector<GuardedRule>> rules_from_;
    std::vector<int> initial_;
    std::vector<std::vector<UntimedPDA::Trans>> out_;
    std::vector<bool> done_;

    int state(const LocOrbit& o) {
        auto [it, fresh] = st_id_.emplace(o, static_cast<int>(states_.size()));
        if (fresh) {
            states_.push_back(&it->first);
            done_.push_back(false);
        }
        return it->second;
    }

    /// orbits of one location met by the projection of g onto [at, at + dim)
    static std::vector<Orbit> hit(const ZoneDNF& g, std::size_t at, const Location& loc) {
        if (loc.dim == 0) return enumerate_orbits(loc.constraint);
        ZoneDNF pr = dnf_and(dnf_project(g, iota_vec(at, at + loc.dim)), loc.constraint);
        if (pr.canonicalize().is_empty()) return {};
        return enumerate_orbits(pr);
    }

    void expand(int f) {
        done_[f] = true;
        std::vector<UntimedPDA::Trans> ts;
        if (f == kStart) {
            for (auto& l : a_.initial.locs) {
                ZoneDNF z = dnf_and(l.constraint, a_.states.find(l.label)->constraint);
                if (!z.canonicalize().is_empty()) successors(f, l.label, z, ts);
            }
        } else {
            const LocOrbit from = *states_[f];
            successors(f, from.label, ZoneDNF{from.orbit.dim(), {from.orbit.zone()}}, ts);
        }
        if (out_.size() < states_.size()) out_.resize(states_.size());
        out_[f] = std::move(ts);
    }

    /// transitions of rules leaving `label` from some point of `from`
    void successors(int f, const std::string& label, const ZoneDNF& from, std::vector<UntimedPDA::Trans>& ts) {
        auto rit = rules_from_.find(label);
        if (rit == rules_from_.end()) return;
        for (auto& [r, guard] : rit->second) {
            auto off = a_.rule_offsets(*r);
            const std::size_t d = off.back();
            const std::size_t k = r->pop.size();
            const Location& lt = *a_.states.find(r->to);
            const int pop = r->pop.empty() ? -1 : sym_.at(r->pop[0]);
            const int push = r->push.empty() ? -1 : sym_.at(r->push[0]);
            ZoneDNF g1 = guard;
            if (from.dim > 0) {
                g1 = dnf_and(g1, place(from, d, off[0]));
                if (g1.canonicalize().is_empty()) continue;
            }
            std::vector<int> lets{-1};
            if (r->input) {
                lets.clear();
                const Location& li = *a_.input.find(*r->input);
                for (auto& o : hit(g1, off[1 + k], li)) lets.push_back(le_id_.at(LocOrbit{li.label, o}));
            }
            for (int l : lets) {
                ZoneDNF g2 = g1;
                if (l >= 0 && letters_[l].orbit.dim() > 0) {
                    const Orbit& lo = letters_[l].orbit;
                    g2 = dnf_and(g1, place(ZoneDNF{lo.dim(), {lo.zone()}}, d, off[1 + k]));
                    if (g2.canonicalize().is_empty()) continue;
                }
                for (auto& o : hit(g2, off[2 + k], lt))
                    ts.push_back(UntimedPDA::Trans{f, state(LocOrbit{lt.label, o}), l, pop, push});
            }
        }
    }
};

} // namespace

UntimedPDA untiming_pda(const TrPDA& a0) {
    if (!a0.stack.is_timeless()) throw std::invalid_argument("the orbit-graph route needs a timeless stack");
    const TrPDA a = a0.is_short_form() ? a0 : to_short_form(a0);
    OrbitGraph g(a);
    // forward closure ignoring the stack
    for (std::size_t q = 0; q < g.size(); ++q) g.out(static_cast<int>(q));
    UntimedPDA p;
    for (std::size_t q = 0; q < g.size(); ++q) {
        p.states.push_back(q == 0 ? "start" : g.orbit(static_cast<int>(q)).str());
        if (g.is_final(static_cast<int>(q))) p.final.push_back(static_cast<int>(q));
        auto& ts = g.out(static_cast<int>(q));
        p.trans.insert(p.trans.end(), ts.begin(), ts.end());
    }
    for (auto& l : g.letters()) p.letters.push_back(l.str());
    p.stack = g.stack();
    p.initial = g.initial();
    return p;
}

Emptiness decide_emptiness_orbit(const TrPDA& a0, std::size_t* explored) {
    if (!a0.stack.is_timeless()) throw std::invalid_argument("the orbit-graph route needs a timeless stack");
    const TrPDA a = a0.is_short_form() ? a0 : to_short_form(a0);
    OrbitGraph g(a);
    bool ne = same_level_search(
        g.initial(), [&](int q) -> const std::vector<UntimedPDA::Trans>& { return g.out(q); },
        [&](int q) { return g.is_final(q); });
    if (explored) *explored = g.size();
    return ne ? Emptiness::Nonempty : Emptiness::Empty;
}

Emptiness decide_emptiness_trcfg(const TrCFG& g) {
    return trcfg_untiming(g).nonempty() ? Emptiness::Nonempty : Emptiness::Empty;
}

// ── Small-instance checks ──

Tri horizontal_reachable(const TrPDA& pre, const Element& p, const Element& q, std::size_t max_steps) {
    const std::size_t n1 = pre.states.dim_of(p.label), n2 = pre.states.dim_of(q.label);
    if (p.point.size() != n1 || q.point.size() != n2) throw DimensionMismatch("element dimension");
    Point joint = p.point;
    joint.insert(joint.end(), q.point.begin(), q.point.end());
    Orbit pair = orbit_of(joint);
    TrPDA h = pre;
    h.states.add("~h.src", n1 + n2, ZoneDNF{n1 + n2, {pair.zone()}});
    h.states.add("~h.dst", 0);
    h.stack.add("~h.mark", n2);
    h.initial = DefinableSet{};
    h.initial.add("~h.src", n1 + n2, ZoneDNF{n1 + n2, {pair.zone()}});
    h.final = DefinableSet{};
    h.final.add("~h.dst", 0);
    {
        // (v, w) -> p-location v, marker w
        const std::size_t d = 2 * (n1 + n2);
        Zone z(d);
        for (std::size_t k = 0; k < n1 + n2; ++k) add_eq(z, k, n1 + n2 + k);
        h.rules.push_back(Rule{"~h.src", {}, std::nullopt, p.label, {"~h.mark"}, ZoneDNF{d, {z}}, "~h.call"});
    }
    {
        // q-location w', marker w, w' = w
        const std::size_t d = 2 * n2;
        Zone z(d);
        for (std::size_t k = 0; k < n2; ++k) add_eq(z, k, n2 + k);
        h.rules.push_back(Rule{q.label, {"~h.mark"}, std::nullopt, "~h.dst", {}, ZoneDNF{d, {z}}, "~h.ret"});
    }
    h.check();
    auto res = bounded_empty_stack_oracle(h, max_steps + 2);
    return res.nonempty ? Tri::True : Tri::Unknown;
}

} // namespace tpda
