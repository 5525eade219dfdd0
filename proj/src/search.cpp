#include "tpda/search.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

namespace tpda {

std::string tri_str(Tri t) {
    switch (t) {
        case Tri::True: return "True";
        case Tri::False: return "False";
        default: return "UnknownAtBound";
    }
}

std::size_t default_max_silent(const TimedWord& w) { return 2 * w.size() + 4; }

namespace {

// ── Symbolic configurations ──

struct Slot {
    std::string label;
    std::vector<std::size_t> vars;
};

struct Node {
    Zone zone;
    Slot state;
    std::vector<Slot> stack;  // bottom first
    std::vector<Slot> inputs;
    std::vector<std::size_t> run;
};

struct Compiled {
    std::size_t idx;
    const Rule* rule;
    std::vector<std::size_t> off;
    std::vector<Zone> guards;
};

class Engine {
public:
    Engine(const TrPDA& a, Int scale, bool zero, bool keep_inputs)
        : a_(a), scale_(scale), zero_(zero), keep_(keep_inputs) {
        for (std::size_t i = 0; i < a.rules.size(); ++i) {
            Compiled c{i, &a.rules[i], a.rule_offsets(a.rules[i]), {}};
            for (auto& z : a.effective_guard(a.rules[i]).disjuncts) c.guards.push_back(z);
            if (!c.guards.empty()) rules_.push_back(std::move(c));
        }
        for (auto& c : rules_) by_from_[c.rule->from].push_back(&c);
    }

    const std::vector<const Compiled*>& rules_from(const std::string& label) const {
        static const std::vector<const Compiled*> none;
        auto it = by_from_.find(label);
        return it == by_from_.end() ? none : it->second;
    }

    std::vector<Node> initial() const {
        std::vector<Node> out;
        for (auto& l : a_.initial.locs) {
            ZoneDNF c = dnf_and(l.constraint, a_.states.find(l.label)->constraint);
            for (auto& g : c.disjuncts) {
                Node n;
                n.zone = Zone(zero_ ? 1 : 0);
                n.state.label = l.label;
                for (std::size_t k = 0; k < l.dim; ++k) n.state.vars.push_back(n.zone.add_var());
                if (!apply(n.zone, g, n.state.vars)) continue;
                out.push_back(std::move(n));
            }
        }
        return out;
    }

    /// successors by one rule; letter fixes the input registers when given
    void step(const Node& n, const Compiled& c, const Element* letter, std::vector<Node>& out) const {
        const Rule& r = *c.rule;
        if (n.state.label != r.from) return;
        const std::size_t k = r.pop.size();
        if (n.stack.size() < k) return;
        for (std::size_t j = 0; j < k; ++j)
            if (n.stack[n.stack.size() - 1 - j].label != r.pop[j]) return;
        if (letter && (!r.input || *r.input != letter->label)) return;
        for (auto& g : c.guards) {
            Node m;
            m.zone = n.zone;
            std::vector<std::size_t> map;
            map.insert(map.end(), n.state.vars.begin(), n.state.vars.end());
            for (std::size_t j = 0; j < k; ++j) {
                auto& v = n.stack[n.stack.size() - 1 - j].vars;
                map.insert(map.end(), v.begin(), v.end());
            }
            Slot in;
            if (r.input) {
                in.label = *r.input;
                for (std::size_t t = c.off[1 + k]; t < c.off[2 + k]; ++t) in.vars.push_back(m.zone.add_var());
                map.insert(map.end(), in.vars.begin(), in.vars.end());
            }
            m.state.label = r.to;
            for (std::size_t t = c.off[2 + k]; t < c.off[3 + k]; ++t) m.state.vars.push_back(m.zone.add_var());
            map.insert(map.end(), m.state.vars.begin(), m.state.vars.end());
            m.stack.assign(n.stack.begin(), n.stack.end() - static_cast<std::ptrdiff_t>(k));
            for (std::size_t j = 0; j < r.push.size(); ++j) {
                Slot s{r.push[j], {}};
                for (std::size_t t = c.off[3 + k + j]; t < c.off[4 + k + j]; ++t) s.vars.push_back(m.zone.add_var());
                map.insert(map.end(), s.vars.begin(), s.vars.end());
                m.stack.push_back(std::move(s));
            }
            if (!apply(m.zone, g, map)) continue;
            if (letter) {
                for (std::size_t t = 0; t < in.vars.size(); ++t) {
                    Rational v = letter->point[t] * scale_;
                    if (v.get_den() != 1) throw std::logic_error("letter not on the scaled grid");
                    Int iv = v.get_num().get_si();
                    m.zone.add(in.vars[t], 0, make_bound(iv, false));
                    m.zone.add(0, in.vars[t], make_bound(checked_neg(iv), false));
                }
                if (!m.zone.canonicalize()) continue;
            }
            m.inputs = n.inputs;
            if (keep_ && r.input) m.inputs.push_back(in);
            m.run = n.run;
            m.run.push_back(c.idx);
            out.push_back(compact(std::move(m)));
        }
    }

    /// restrict to the final constraint; nullopt if the state is not final
    std::optional<Zone> final_zone(const Node& n, bool need_empty_stack) const {
        if (need_empty_stack && !n.stack.empty()) return std::nullopt;
        auto* l = a_.final.find(n.state.label);
        if (!l) return std::nullopt;
        for (auto& g : l->constraint.disjuncts) {
            Zone z = n.zone;
            if (apply(z, g, n.state.vars)) return z;
        }
        return std::nullopt;
    }

    /// labels plus the zone over non-input variables
    std::string key(const Node& n) const {
        std::vector<std::size_t> live;
        if (zero_) live.push_back(0);
        live.insert(live.end(), n.state.vars.begin(), n.state.vars.end());
        for (auto& s : n.stack) live.insert(live.end(), s.vars.begin(), s.vars.end());
        Zone z = n.zone.restrict_to(live);
        std::string k = n.state.label;
        k += '|';
        for (auto& s : n.stack) {
            k += s.label;
            k += ',';
        }
        k += '|';
        for (std::size_t i = 0; i < z.dim(); ++i)
            for (std::size_t j = 0; j < z.dim(); ++j) {
                Raw b = z.at(i, j);
                k.append(reinterpret_cast<const char*>(&b), sizeof b);
            }
        return k;
    }

private:
    const TrPDA& a_;
    Int scale_;
    bool zero_, keep_;
    std::vector<Compiled> rules_;
    std::unordered_map<std::string, std::vector<const Compiled*>> by_from_;

    bool apply(Zone& z, const Zone& g, const std::vector<std::size_t>& map) const {
        for (std::size_t i = 0; i < g.dim(); ++i)
            for (std::size_t j = 0; j < g.dim(); ++j) {
                if (i == j) continue;
                Raw b = g.at(i, j);
                if (b == kInf) continue;
                z.add(map[i], map[j], scale_ == 1 ? b : make_bound(checked_mul(bound_value(b), scale_), bound_strict(b)));
            }
        return z.canonicalize();
    }

    Node compact(Node n) const {
        std::vector<std::size_t> live;
        if (zero_) live.push_back(0);
        auto take = [&](Slot& s) {
            for (auto& v : s.vars) {
                live.push_back(v);
                v = live.size() - 1;
            }
        };
        take(n.state);
        for (auto& s : n.stack) take(s);
        for (auto& s : n.inputs) take(s);
        n.zone = n.zone.restrict_to(live);
        return n;
    }
};

Int word_scale(const TimedWord& w) {
    Int s = 1;
    for (auto& e : w) s = std::lcm(s, common_denominator(e.point));
    return s;
}

} // namespace

// ── Acceptance ──

Tri accepts(const TrPDA& a, const TimedWord& w, std::size_t max_silent, AcceptStats* stats) {
    for (auto& e : w)
        if (!member(a.input, e)) throw std::invalid_argument("letter " + e.str() + " is not in the input alphabet");
    Engine eng(a, word_scale(w), true, false);
    AcceptStats st;
    // visited: key and position -> least silent count seen
    std::unordered_map<std::string, std::size_t> seen;
    std::function<bool(const Node&, std::size_t, std::size_t)> dfs = [&](const Node& n, std::size_t pos,
                                                                          std::size_t silent) -> bool {
        ++st.nodes;
        if (pos == w.size() && eng.final_zone(n, false)) return true;
        std::string k = eng.key(n) + "#" + std::to_string(pos);
        auto it = seen.find(k);
        if (it != seen.end() && it->second <= silent) return false;
        seen[k] = silent;
        std::vector<Node> next;
        for (auto* cp : eng.rules_from(n.state.label)) {
            auto& c = *cp;
            next.clear();
            if (c.rule->input) {
                if (pos >= w.size()) continue;
                eng.step(n, c, &w[pos], next);
                for (auto& m : next)
                    if (dfs(m, pos + 1, 0)) return true;
            } else {
                eng.step(n, c, nullptr, next);
                if (next.empty()) continue;
                if (silent >= max_silent) {
                    st.cut = true;
                    continue;
                }
                for (auto& m : next)
                    if (dfs(m, pos, silent + 1)) return true;
            }
        }
        return false;
    };
    bool found = false;
    for (auto& n : eng.initial())
        if (dfs(n, 0, 0)) {
            found = true;
            break;
        }
    if (stats) *stats = st;
    if (found) return Tri::True;
    return st.cut ? Tri::Unknown : Tri::False;
}

// ── Emptiness oracle ──

namespace {

OracleResult oracle_impl(const TrPDA& a, std::size_t max_steps, bool empty_stack) {
    Engine eng(a, 1, false, true);
    OracleResult res;
    auto init = eng.initial();
    for (std::size_t bound = 0; bound <= max_steps; ++bound) {
        std::unordered_map<std::string, std::size_t> seen;  // key -> most remaining steps tried
        std::function<bool(const Node&, std::size_t)> dfs = [&](const Node& n, std::size_t left) -> bool {
            ++res.nodes;
            if (auto fz = eng.final_zone(n, empty_stack)) {
                auto p = fz->witness();
                if (p) {
                    res.nonempty = true;
                    res.run = n.run;
                    for (auto& s : n.inputs) {
                        Element e{s.label, {}};
                        for (auto v : s.vars) e.point.push_back((*p)[v]);
                        res.word.push_back(std::move(e));
                    }
                    return true;
                }
            }
            if (left == 0) return false;
            std::string k = eng.key(n);
            auto it = seen.find(k);
            if (it != seen.end() && it->second >= left) return false;
            seen[k] = left;
            std::vector<Node> next;
            for (auto* c : eng.rules_from(n.state.label)) {
                next.clear();
                eng.step(n, *c, nullptr, next);
                for (auto& m : next)
                    if (dfs(m, left - 1)) return true;
            }
            return false;
        };
        for (auto& n : init)
            if (dfs(n, bound)) return res;
    }
    return res;
}

} // namespace

// ── Sampling ──

std::vector<SampledRun> sample_accepted(const TrPDA& a, std::size_t max_steps, std::size_t max_inputs,
                                        std::size_t count, std::uint64_t seed, std::size_t per_run) {
    Engine eng(a, 1, false, true);
    std::mt19937_64 rng(seed);
    std::vector<SampledRun> out;
    std::set<std::vector<std::size_t>> seen_runs;
    auto init = eng.initial();
    if (init.empty()) return out;
    const std::size_t restarts = 40 + 4 * count, per_restart = 4000;
    for (std::size_t r = 0; r < restarts && out.size() < count; ++r) {
        std::size_t budget = per_restart;
        std::function<bool(const Node&, std::size_t)> dfs = [&](const Node& n, std::size_t left) -> bool {
            if (budget == 0 || out.size() >= count) return true;
            --budget;
            if (auto fz = eng.final_zone(n, false); fz && !seen_runs.count(n.run)) {
                seen_runs.insert(n.run);
                for (std::size_t t = 0; t < per_run && out.size() < count; ++t) {
                    Point p = fz->sample(rng);
                    SampledRun sr;
                    sr.run = n.run;
                    for (auto& s : n.inputs) {
                        Element e{s.label, {}};
                        for (auto v : s.vars) e.point.push_back(p[v]);
                        sr.word.push_back(std::move(e));
                    }
                    out.push_back(std::move(sr));
                }
                return true;  // move on to another skeleton
            }
            if (left == 0) return false;
            auto rules = eng.rules_from(n.state.label);
            std::shuffle(rules.begin(), rules.end(), rng);
            std::vector<Node> next;
            for (auto* c : rules) {
                if (c->rule->input && n.inputs.size() >= max_inputs) continue;
                next.clear();
                eng.step(n, *c, nullptr, next);
                std::shuffle(next.begin(), next.end(), rng);
                for (auto& m : next)
                    if (dfs(m, left - 1)) return true;
            }
            return false;
        };
        const Node& start = init[rng() % init.size()];
        dfs(start, 1 + rng() % max_steps);
    }
    return out;
}

OracleResult bounded_empty_oracle(const TrPDA& a, std::size_t max_steps) { return oracle_impl(a, max_steps, false); }

OracleResult bounded_empty_stack_oracle(const TrPDA& a, std::size_t max_steps) {
    return oracle_impl(a, max_steps, true);
}

} // namespace tpda
