#include "tpda/intsets.hpp"

#include <algorithm>
#include <boost/dynamic_bitset.hpp>
#include <deque>
#include <unordered_map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "tpda/constraint.hpp"

namespace tpda {

namespace {

Int fmod_pos(Int a, Int g) {
    Int r = a % g;
    return r < 0 ? r + g : r;
}

} // namespace

std::string verdict_str(Verdict v) {
    switch (v) {
        case Verdict::True: return "True";
        case Verdict::False: return "False";
        default: return "Unknown";
    }
}

// ── Systems ──

int EqSystem::var(const std::string& name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(names.size());
    names.push_back(name);
    index.emplace(name, id);
    return id;
}

std::optional<int> EqSystem::find(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

void EqSystem::add_const(int x, Int k) {
    if (k < -1 || k > 1) throw std::invalid_argument("constant outside {-1,0,1}");
    Inclusion i{Inclusion::Const};
    i.x = x;
    i.k = k;
    incs.push_back(i);
}

void EqSystem::add_inter(int x, int y) {
    Inclusion i{Inclusion::Inter};
    i.x = x;
    i.y = y;
    incs.push_back(i);
}

void EqSystem::add_add(int x, int y, int z) {
    Inclusion i{Inclusion::Add};
    i.x = x;
    i.y = y;
    i.z = z;
    incs.push_back(i);
}

void EqSystem::add_copy(int x, int y) {
    bool fresh = !find("~zero");
    int zero = var("~zero");
    if (fresh) add_const(zero, 0);
    add_add(x, y, zero);
}

namespace {

int const_var(EqSystem& s, Int k) {
    static const char* nm[] = {"~mone", "~zero", "~one"};
    std::string name = nm[k + 1];
    bool fresh = !s.find(name);
    int v = s.var(name);
    if (fresh) s.add_const(v, k);
    return v;
}

/// identifier-safe integer: -3 -> m3
std::string num_tag(Int m) { return m < 0 ? "m" + std::to_string(-m) : std::to_string(m); }

} // namespace

int EqSystem::gadget_eq(Int m) {
    std::string name = "~eq" + num_tag(m);
    if (auto v = find(name)) return *v;
    if (m >= -1 && m <= 1) {
        int c = const_var(*this, m);
        int x = var(name);
        add_copy(x, c);
        return x;
    }
    Int sign = m < 0 ? -1 : 1;
    Int h = (m < 0 ? -m : m) / 2;
    int half = gadget_eq(sign * h);
    int x = var(name);
    if ((m < 0 ? -m : m) % 2 == 0) {
        add_add(x, half, half);
    } else {
        int aux = var(name + ".h");
        add_add(aux, half, half);
        add_add(x, aux, const_var(*this, sign));
    }
    return x;
}

int EqSystem::gadget_lt(Int m) {
    std::string name = "~lt" + num_tag(m);
    if (auto v = find(name)) return *v;
    int e = gadget_eq(checked_add(m, -1));
    int x = var(name);
    add_copy(x, e);
    add_add(x, x, const_var(*this, -1));
    return x;
}

int EqSystem::gadget_gt(Int m) {
    std::string name = "~gt" + num_tag(m);
    if (auto v = find(name)) return *v;
    int e = gadget_eq(checked_add(m, 1));
    int x = var(name);
    add_copy(x, e);
    add_add(x, x, const_var(*this, 1));
    return x;
}

int EqSystem::gadget_all() {
    if (auto v = find("~all")) return *v;
    int x = var("~all");
    add_const(x, 0);
    add_add(x, const_var(*this, 1), x);
    add_add(x, const_var(*this, -1), x);
    return x;
}

bool EqSystem::intersection_free() const {
    return std::none_of(incs.begin(), incs.end(), [](const Inclusion& i) { return i.kind == Inclusion::Inter; });
}

std::string EqSystem::str() const {
    std::ostringstream os;
    for (auto& i : incs) {
        os << names[i.x] << " >= ";
        switch (i.kind) {
            case Inclusion::Const: os << "{" << i.k << "}"; break;
            case Inclusion::Inter: os << names[i.y] << " ^ {0}"; break;
            case Inclusion::Add: os << names[i.y] << " + " << names[i.z]; break;
        }
        os << "\n";
    }
    return os.str();
}

// ── Equation file parser ──

namespace {

struct EqTok {
    enum Kind { Name, Num, Sym, End } kind;
    std::string text;
    int line, col;
};

std::vector<EqTok> eq_lex(const std::string& text) {
    std::vector<EqTok> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto adv = [&](std::size_t n) {
        for (std::size_t t = 0; t < n; ++t) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') adv(1);
            continue;
        }
        if (c == '\n') {
            out.push_back({EqTok::Sym, "\n", line, col});
            adv(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            adv(1);
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '~') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_' ||
                                       text[j] == '.' || text[j] == '\'' || text[j] == '~'))
                ++j;
            out.push_back({EqTok::Name, text.substr(i, j - i), line, col});
            adv(j - i);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            std::size_t j = i + 1;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            out.push_back({EqTok::Num, text.substr(i, j - i), line, col});
            adv(j - i);
            continue;
        }
        if (c == '>' && i + 1 < text.size() && text[i + 1] == '=') {
            out.push_back({EqTok::Sym, ">=", line, col});
            adv(2);
            continue;
        }
        if (std::string("+|^{}[]()<>,").find(c) != std::string::npos) {
            out.push_back({EqTok::Sym, std::string(1, c), line, col});
            adv(1);
            continue;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    out.push_back({EqTok::Sym, "\n", line, col});
    out.push_back({EqTok::End, "", line, col});
    return out;
}

/// parse tree for right-hand sides
struct Expr {
    enum Kind { Var, Consts, Eq, Lt, Gt, Union, Sum, Inter } kind;
    std::string name;
    std::vector<Int> ks;
    Int m = 0;
    std::vector<Expr> kids;
};

Expr mk(Expr::Kind k) {
    Expr e;
    e.kind = k;
    return e;
}

class EqParser {
public:
    explicit EqParser(const std::string& text) : toks_(eq_lex(text)) {}

    EqSystem run() {
        while (peek().kind != EqTok::End) {
            if (peek().text == "\n") {
                ++pos_;
                continue;
            }
            EqTok lhs = next();
            if (lhs.kind != EqTok::Name) fail("expected variable name", lhs);
            expect(">=");
            Expr e = expr();
            if (peek().text != "\n") fail("expected end of line", peek());
            int x = sys_.var(lhs.text);
            emit_top(x, e);
        }
        return std::move(sys_);
    }

private:
    std::vector<EqTok> toks_;
    std::size_t pos_ = 0;
    EqSystem sys_;
    int aux_ = 0;

    const EqTok& peek() const { return toks_[pos_]; }
    EqTok next() { return toks_[pos_++]; }
    [[noreturn]] void fail(const std::string& msg, const EqTok& t) const { throw ParseError(msg, t.line, t.col); }
    void expect(const std::string& s) {
        if (peek().text != s) fail("expected '" + s + "'", peek());
        ++pos_;
    }
    Int number() {
        EqTok t = next();
        if (t.kind != EqTok::Num) fail("expected integer", t);
        try {
            return std::stoll(t.text);
        } catch (const std::out_of_range&) {
            fail("integer out of range", t);
        }
    }

    Expr expr() {
        Expr first = sum();
        if (peek().text != "|") return first;
        Expr u = mk(Expr::Union);
        u.kids.push_back(std::move(first));
        while (peek().text == "|") {
            ++pos_;
            u.kids.push_back(sum());
        }
        return u;
    }

    Expr sum() {
        Expr first = prim();
        if (peek().text != "+") return first;
        Expr s = mk(Expr::Sum);
        s.kids.push_back(std::move(first));
        while (peek().text == "+") {
            ++pos_;
            s.kids.push_back(prim());
        }
        return s;
    }

    Expr prim() {
        Expr e = atom();
        while (peek().text == "^") {
            EqTok at = next();
            expect("{");
            EqTok z = peek();
            if (number() != 0 || peek().text != "}")
                fail("only intersection with {0} is supported; general intersections are undecidable", z);
            expect("}");
            (void)at;
            Expr i = mk(Expr::Inter);
            i.kids.push_back(std::move(e));
            e = std::move(i);
        }
        return e;
    }

    Expr atom() {
        EqTok t = peek();
        if (t.kind == EqTok::Name) {
            ++pos_;
            Expr e = mk(Expr::Var);
            e.name = t.text;
            return e;
        }
        if (t.text == "{") {
            ++pos_;
            Expr e = mk(Expr::Consts);
            e.ks.push_back(number());
            while (peek().text == ",") {
                ++pos_;
                e.ks.push_back(number());
            }
            expect("}");
            return e;
        }
        if (t.text == "[") {
            ++pos_;
            Expr e = mk(Expr::Eq);
            if (peek().text == "<") {
                ++pos_;
                e.kind = Expr::Lt;
            } else if (peek().text == ">") {
                ++pos_;
                e.kind = Expr::Gt;
            }
            e.m = number();
            expect("]");
            return e;
        }
        if (t.text == "(") {
            ++pos_;
            Expr e = expr();
            expect(")");
            return e;
        }
        fail("expected operand", t);
    }

    int fresh() { return sys_.var("~aux" + std::to_string(aux_++)); }

    int const_of(Int k) {
        if (k >= -1 && k <= 1) return const_var(sys_, k);
        return sys_.gadget_eq(k);
    }

    /// variable whose least solution equals e
    int to_var(const Expr& e) {
        if (e.kind == Expr::Var) return sys_.var(e.name);
        if (e.kind == Expr::Consts && e.ks.size() == 1) return const_of(e.ks[0]);
        if (e.kind == Expr::Eq) return sys_.gadget_eq(e.m);
        if (e.kind == Expr::Lt) return sys_.gadget_lt(e.m);
        if (e.kind == Expr::Gt) return sys_.gadget_gt(e.m);
        int x = fresh();
        emit_top(x, e);
        return x;
    }

    /// x >= e
    void emit_top(int x, const Expr& e) {
        switch (e.kind) {
            case Expr::Union:
                for (auto& k : e.kids) emit_top(x, k);
                return;
            case Expr::Consts:
                for (Int k : e.ks) {
                    if (k >= -1 && k <= 1)
                        sys_.add_const(x, k);
                    else
                        sys_.add_copy(x, const_of(k));
                }
                return;
            case Expr::Inter: sys_.add_inter(x, to_var(e.kids[0])); return;
            case Expr::Sum: {
                int acc = to_var(e.kids[0]);
                for (std::size_t i = 1; i + 1 < e.kids.size(); ++i) {
                    int nxt = fresh();
                    sys_.add_add(nxt, acc, to_var(e.kids[i]));
                    acc = nxt;
                }
                sys_.add_add(x, acc, to_var(e.kids.back()));
                return;
            }
            default: sys_.add_copy(x, to_var(e)); return;
        }
    }
};

} // namespace

EqSystem parse_eq(const std::string& text) { return EqParser(text).run(); }

// ── Normal form ──

IntSetNF IntSetNF::point(Int k) {
    IntSetNF s;
    s.finite.insert(k);
    return s;
}

bool IntSetNF::contains(Int k) const {
    if (finite.count(k)) return true;
    for (auto [a, p] : right)
        if (k >= a && (k - a) % p == 0) return true;
    for (auto [a, p] : left)
        if (k <= a && (a - k) % p == 0) return true;
    for (auto [a, g] : cosets)
        if (fmod_pos(k - a, g) == 0) return true;
    return false;
}

void IntSetNF::unite(const IntSetNF& o) {
    finite.insert(o.finite.begin(), o.finite.end());
    right.insert(o.right.begin(), o.right.end());
    left.insert(o.left.begin(), o.left.end());
    cosets.insert(o.cosets.begin(), o.cosets.end());
    simplify();
}

void IntSetNF::simplify() {
    bool changed = true;
    while (changed) {
        changed = false;
        // cosets: normalize, merge residue classes, drop subsumed
        {
            std::set<std::pair<Int, Int>> cs;
            for (auto [a, g] : cosets) cs.insert({fmod_pos(a, g), g});
            std::map<Int, std::set<Int>> by_g;
            for (auto [a, g] : cs) by_g[g].insert(a);
            cs.clear();
            for (auto& [g, rs] : by_g) {
                // smallest d | g such that residues are closed under +d
                Int best = g;
                for (Int d = 1; d < g; ++d) {
                    if (g % d) continue;
                    bool ok = true;
                    for (Int r : rs)
                        if (!rs.count((r + d) % g)) {
                            ok = false;
                            break;
                        }
                    if (ok) {
                        best = d;
                        break;
                    }
                }
                for (Int r : rs) cs.insert({r % best, best});
            }
            std::set<std::pair<Int, Int>> kept;
            for (auto c : cs) {
                bool sub = false;
                for (auto d : cs)
                    if (d != c && c.second % d.second == 0 && fmod_pos(c.first - d.first, d.second) == 0) sub = true;
                if (!sub) kept.insert(c);
            }
            if (kept != cosets) {
                cosets = std::move(kept);
                changed = true;
            }
        }
        auto in_coset = [&](Int a, Int p) {
            for (auto [b, g] : cosets)
                if (p % g == 0 && fmod_pos(a - b, g) == 0) return true;
            return false;
        };
        // extend progressions through finite points
        {
            std::set<std::pair<Int, Int>> r2, l2;
            for (auto [a, p] : right) {
                while (finite.count(a - p)) {
                    finite.erase(a - p);
                    a -= p;
                    changed = true;
                }
                r2.insert({a, p});
            }
            for (auto [a, p] : left) {
                while (finite.count(a + p)) {
                    finite.erase(a + p);
                    a += p;
                    changed = true;
                }
                l2.insert({a, p});
            }
            right = std::move(r2);
            left = std::move(l2);
        }
        // opposite progressions that meet form a coset
        for (auto r = right.begin(); r != right.end() && !changed; ++r)
            for (auto l = left.begin(); l != left.end(); ++l)
                if (r->second == l->second && fmod_pos(r->first - l->first, r->second) == 0 &&
                    l->first >= r->first - r->second) {
                    cosets.insert({fmod_pos(r->first, r->second), r->second});
                    right.erase(r);
                    left.erase(l);
                    changed = true;
                    break;
                }
        if (changed) continue;
        // subsumption among progressions
        auto prune = [&](std::set<std::pair<Int, Int>>& progs, int dir) {
            std::set<std::pair<Int, Int>> kept;
            for (auto c : progs) {
                bool sub = in_coset(c.first, c.second);
                for (auto d : progs) {
                    if (sub) break;
                    if (d == c || c.second % d.second != 0) continue;
                    Int diff = (c.first - d.first) * dir;
                    if (diff >= 0 && diff % d.second == 0) sub = true;
                }
                if (!sub) kept.insert(c);
            }
            if (kept != progs) {
                progs = std::move(kept);
                changed = true;
            }
        };
        prune(right, 1);
        prune(left, -1);
        // finite points covered by something else
        for (auto it = finite.begin(); it != finite.end();) {
            Int k = *it;
            bool cov = false;
            for (auto [a, p] : right)
                if (k >= a && (k - a) % p == 0) cov = true;
            for (auto [a, p] : left)
                if (k <= a && (a - k) % p == 0) cov = true;
            for (auto [a, g] : cosets)
                if (fmod_pos(k - a, g) == 0) cov = true;
            if (cov) {
                it = finite.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
}

bool IntSetNF::includes(const IntSetNF& o) const {
    if (o.empty()) return true;
    if (empty()) return false;
    // beyond all anchors both sets are periodic with period L
    Int lo = 0, hi = 0;
    bool any = false;
    auto anchor = [&](Int a) {
        if (!any) {
            lo = hi = a;
            any = true;
        }
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    };
    Int L = 1;
    for (const IntSetNF* s : {this, &o}) {
        for (Int k : s->finite) anchor(k);
        for (auto [a, p] : s->right) {
            anchor(a);
            L = std::lcm(L, p);
        }
        for (auto [a, p] : s->left) {
            anchor(a);
            L = std::lcm(L, p);
        }
        for (auto [a, g] : s->cosets) L = std::lcm(L, g);
        if (L > (Int(1) << 22)) throw std::overflow_error("period too large for inclusion test");
    }
    Int from = lo - L, to = hi + L;
    if (to - from > (Int(1) << 24)) throw std::overflow_error("window too large for inclusion test");
    for (Int k : o.finite)
        if (!contains(k)) return false;
    auto scan = [&](Int start, Int step) {
        for (Int k = start; k >= from && k <= to; k += step)
            if (!contains(k)) return false;
        return true;
    };
    for (auto [a, p] : o.right)
        if (!scan(a, p)) return false;
    for (auto [a, p] : o.left)
        if (!scan(a, -p)) return false;
    for (auto [a, g] : o.cosets) {
        Int s = from + fmod_pos(a - from, g);
        if (!scan(s, g)) return false;
    }
    return true;
}

std::optional<Int> IntSetNF::some_element() const {
    if (!finite.empty()) return *finite.begin();
    if (!right.empty()) return right.begin()->first;
    if (!left.empty()) return left.begin()->first;
    if (!cosets.empty()) return cosets.begin()->first;
    return std::nullopt;
}

std::string IntSetNF::str() const {
    if (empty()) return "{}";
    std::vector<std::string> parts;
    if (!finite.empty()) {
        std::string f = "{";
        bool first = true;
        for (Int k : finite) {
            if (!first) f += ",";
            f += std::to_string(k);
            first = false;
        }
        parts.push_back(f + "}");
    }
    for (auto [a, p] : right) parts.push_back(std::to_string(a) + "+" + std::to_string(p) + "N");
    for (auto [a, p] : left) parts.push_back(std::to_string(a) + "-" + std::to_string(p) + "N");
    for (auto [a, g] : cosets) parts.push_back(std::to_string(a) + "+" + std::to_string(g) + "Z");
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? " | " : "") + parts[i];
    return out;
}

// ── Addition ──

namespace {

struct Comp {
    enum Kind { F, R, L, C } kind;
    Int a, p;  // p = 0 for points
};

std::vector<Comp> comps(const IntSetNF& s) {
    std::vector<Comp> out;
    for (Int k : s.finite) out.push_back({Comp::F, k, 0});
    for (auto [a, p] : s.right) out.push_back({Comp::R, a, p});
    for (auto [a, p] : s.left) out.push_back({Comp::L, a, p});
    for (auto [a, g] : s.cosets) out.push_back({Comp::C, a, g});
    return out;
}

/// (a + pN) + (b + qN) with a = b = 0, as exceptions plus a tail
void add_right(Int a, Int p, Int b, Int q, int dir, IntSetNF& out) {
    Int g = std::gcd(p, q);
    Int pq = checked_mul(p, q);
    Int base = checked_add(a, b);
    for (Int n = 0; n < q; ++n)
        for (Int m = 0; m < p; ++m) {
            Int v = n * p + m * q;
            if (v < pq) out.finite.insert(base + dir * v);
        }
    if (dir > 0)
        out.right.insert({base + pq, g});
    else
        out.left.insert({base - pq, g});
}

void add_comp(const Comp& x, const Comp& y, IntSetNF& out) {
    const Comp& u = x.kind <= y.kind ? x : y;
    const Comp& v = x.kind <= y.kind ? y : x;
    Int s = checked_add(u.a, v.a);
    if (v.kind == Comp::C) {
        Int g = u.kind == Comp::F ? v.p : std::gcd(u.p, v.p);
        out.cosets.insert({fmod_pos(s, g), g});
        return;
    }
    if (u.kind == Comp::F) {
        if (v.kind == Comp::F) out.finite.insert(s);
        if (v.kind == Comp::R) out.right.insert({s, v.p});
        if (v.kind == Comp::L) out.left.insert({s, v.p});
        return;
    }
    if (u.kind == Comp::R && v.kind == Comp::R) return add_right(u.a, u.p, v.a, v.p, 1, out);
    if (u.kind == Comp::L && v.kind == Comp::L) return add_right(u.a, u.p, v.a, v.p, -1, out);
    Int g = std::gcd(u.p, v.p);
    out.cosets.insert({fmod_pos(s, g), g});
}

} // namespace

IntSetNF nf_add(const IntSetNF& a, const IntSetNF& b) {
    IntSetNF out;
    auto ca = comps(a), cb = comps(b);
    for (auto& x : ca)
        for (auto& y : cb) add_comp(x, y, out);
    out.simplify();
    return out;
}

// ── Intersection-free emptiness ──

bool nonempty_intersection_free(const EqSystem& s, int x) {
    if (!s.intersection_free()) throw std::invalid_argument("system contains intersections with {0}");
    std::vector<char> prod(s.names.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& i : s.incs) {
            if (prod[i.x]) continue;
            if (i.kind == Inclusion::Const || (i.kind == Inclusion::Add && prod[i.y] && prod[i.z])) {
                prod[i.x] = 1;
                changed = true;
            }
        }
    }
    return prod[x];
}

// ── Kleene iteration with acceleration ──

namespace {

/// for Add(x, y, z): variables whose sum C satisfies x >= x + C, one list per operand that reaches back to x
class CycleSides {
public:
    explicit CycleSides(const EqSystem& s) : s_(s), out_(s.names.size()), trees_(s.names.size()) {
        // flow edge v -> x with side w, for x >= v + w
        for (auto& i : s.incs)
            if (i.kind == Inclusion::Add) {
                out_[i.y].push_back({i.x, i.z});
                out_[i.z].push_back({i.x, i.y});
            }
        components();
    }

    std::vector<std::vector<int>> of(std::size_t k) {
        auto& inc = s_.incs[k];
        std::vector<std::vector<int>> res;
        if (inc.kind != Inclusion::Add) return res;
        if (comp_[inc.y] != comp_[inc.x] && comp_[inc.z] != comp_[inc.x]) return res;
        const Tree& t = tree(inc.x);
        for (auto [target, other] : {std::pair{inc.y, inc.z}, std::pair{inc.z, inc.y}}) {
            auto it = t.find(target);
            if (it == t.end()) continue;
            std::vector<int> sides{other};
            for (int v = target; v != inc.x;) {
                auto [prev, side] = t.at(v);
                sides.push_back(side);
                v = prev;
            }
            res.push_back(std::move(sides));
            if (inc.y == inc.z) break;
        }
        return res;
    }

private:
    /// variable -> (predecessor, side variable)
    using Tree = std::unordered_map<int, std::pair<int, int>>;
    const EqSystem& s_;
    std::vector<std::vector<std::pair<int, int>>> out_;
    std::vector<std::optional<Tree>> trees_;
    std::vector<int> comp_;

    /// Tarjan, iterative
    void components() {
        const int n = static_cast<int>(out_.size());
        comp_.assign(n, -1);
        std::vector<int> idx(n, -1), low(n, 0), stack;
        std::vector<char> on(n, 0);
        int counter = 0, ncomp = 0;
        std::vector<std::pair<int, std::size_t>> call;
        for (int r = 0; r < n; ++r) {
            if (idx[r] >= 0) continue;
            call.push_back({r, 0});
            idx[r] = low[r] = counter++;
            stack.push_back(r);
            on[r] = 1;
            while (!call.empty()) {
                auto& [v, e] = call.back();
                if (e < out_[v].size()) {
                    int w = out_[v][e++].first;
                    if (idx[w] < 0) {
                        idx[w] = low[w] = counter++;
                        stack.push_back(w);
                        on[w] = 1;
                        call.push_back({w, 0});
                    } else if (on[w]) {
                        low[v] = std::min(low[v], idx[w]);
                    }
                    continue;
                }
                int done = v;
                call.pop_back();
                if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
                if (low[done] == idx[done]) {
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on[w] = 0;
                        comp_[w] = ncomp;
                    } while (w != done);
                    ++ncomp;
                }
            }
        }
    }

    /// shortest paths from x along flow edges inside x's component
    const Tree& tree(int x) {
        if (trees_[x]) return *trees_[x];
        Tree t;
        std::deque<int> q{x};
        t.emplace(x, std::make_pair(-1, -1));
        while (!q.empty()) {
            int v = q.front();
            q.pop_front();
            for (auto [w, sd] : out_[v])
                if (comp_[w] == comp_[x] && t.emplace(w, std::make_pair(v, sd)).second) q.push_back(w);
        }
        trees_[x] = std::move(t);
        return *trees_[x];
    }
};

std::vector<Int> generators(const IntSetNF& c) {
    std::set<Int> g;
    for (Int k : c.finite) g.insert(k);
    for (auto [a, p] : c.right) {
        g.insert(a);
        g.insert(a + p);
    }
    for (auto [a, p] : c.left) {
        g.insert(a);
        g.insert(a - p);
    }
    for (auto [a, m] : c.cosets) {
        g.insert(a == 0 ? m : a);
        g.insert(a - m);
    }
    g.erase(0);
    std::vector<Int> out(g.begin(), g.end());
    if (out.size() > 8) out.resize(8);
    return out;
}

constexpr std::size_t kFiniteCap = 20000;

} // namespace

KleeneResult kleene_solve(const EqSystem& s, std::size_t budget) {
    const std::size_t n = s.names.size();
    KleeneResult res;
    res.values.assign(n, IntSetNF{});
    CycleSides sides(s);
    std::vector<std::vector<std::size_t>> deps(n);
    for (std::size_t k = 0; k < s.incs.size(); ++k) {
        auto& i = s.incs[k];
        if (i.kind == Inclusion::Const) continue;
        deps[i.y].push_back(k);
        if (i.kind == Inclusion::Add && i.z != i.y) deps[i.z].push_back(k);
    }
    auto& val = res.values;
    auto rhs = [&](const Inclusion& i) {
        switch (i.kind) {
            case Inclusion::Const: return IntSetNF::point(i.k);
            case Inclusion::Inter: return val[i.y].contains(0) ? IntSetNF::point(0) : IntSetNF{};
            default: return nf_add(val[i.y], val[i.z]);
        }
    };
    // grow x by r; true if something new arrived
    auto grow = [&](int x, const IntSetNF& r) {
        if (r.empty() || val[x].includes(r)) return false;
        val[x].unite(r);
        return true;
    };
    std::deque<std::size_t> work;
    std::vector<char> queued(s.incs.size(), 1);
    for (std::size_t k = 0; k < s.incs.size(); ++k) work.push_back(k);
    auto touch = [&](int x) {
        for (auto k : deps[x])
            if (!queued[k]) {
                queued[k] = 1;
                work.push_back(k);
            }
    };
    try {
        while (!work.empty()) {
            if (res.steps >= budget) return res;
            std::size_t k = work.front();
            work.pop_front();
            queued[k] = 0;
            ++res.steps;
            auto& inc = s.incs[k];
            if (!grow(inc.x, rhs(inc))) continue;
            if (val[inc.x].finite.size() > kFiniteCap) return res;
            for (auto& side : sides.of(k)) {
                IntSetNF c = val[side[0]];
                for (std::size_t t = 1; t < side.size() && !c.empty(); ++t) c = nf_add(c, val[side[t]]);
                if (c.empty()) continue;
                for (Int g : generators(c)) {
                    IntSetNF prog;
                    if (g > 0)
                        prog.right.insert({0, g});
                    else
                        prog.left.insert({0, -g});
                    grow(inc.x, nf_add(val[inc.x], prog));
                }
            }
            touch(inc.x);
        }
        // confirm the post-fixpoint
        for (auto& inc : s.incs)
            if (!val[inc.x].includes(rhs(inc))) return res;
    } catch (const std::overflow_error&) {
        return res;
    }
    res.exact = true;
    return res;
}

// ── Derivation oracle ──

DerivationResult derivation_oracle(const EqSystem& s, int x, std::size_t depth, Int window) {
    using Bits = boost::dynamic_bitset<>;
    const std::size_t n = s.names.size();
    const std::size_t width = static_cast<std::size_t>(2 * window + 1);
    DerivationResult res;
    std::vector<Bits> cur(n, Bits(width)), base(n, Bits(width));
    std::vector<char> ne(n, 0), ne_base(n, 0);
    for (auto& i : s.incs)
        if (i.kind == Inclusion::Const) {
            base[i.x].set(static_cast<std::size_t>(i.k + window));
            ne_base[i.x] = 1;
        }
    cur = base;
    ne = ne_base;
    const std::size_t zero = static_cast<std::size_t>(window);
    for (std::size_t d = 0; d < depth; ++d) {
        auto nxt = base;
        auto ne2 = ne_base;
        for (auto& i : s.incs) {
            if (i.kind == Inclusion::Inter) {
                if (cur[i.y].test(zero)) {
                    nxt[i.x].set(zero);
                    ne2[i.x] = 1;
                }
            } else if (i.kind == Inclusion::Add) {
                if (ne[i.y] && ne[i.z]) ne2[i.x] = 1;
                const Bits& a = cur[i.y];
                const Bits& b = cur[i.z];
                const std::size_t bc = b.count();
                for (auto p = a.find_first(); p != Bits::npos; p = a.find_next(p)) {
                    Int shift = static_cast<Int>(p) - window;
                    Bits sh = shift >= 0 ? (b << static_cast<std::size_t>(shift)) : (b >> static_cast<std::size_t>(-shift));
                    if (sh.count() < bc) res.truncated = true;
                    nxt[i.x] |= sh;
                }
            }
        }
        cur = std::move(nxt);
        ne = std::move(ne2);
    }
    for (auto p = cur[x].find_first(); p != Bits::npos; p = cur[x].find_next(p))
        res.elements.insert(static_cast<Int>(p) - window);
    res.nonempty = ne[x];
    return res;
}

// ── Membership and non-emptiness ──

Verdict membership(const EqSystem& s, int x, Int k, Backend b, std::size_t budget, std::size_t depth) {
    if (x < 0 || static_cast<std::size_t>(x) >= s.names.size()) throw std::invalid_argument("unknown variable");
    if (b == Backend::Bounded) {
        Int w = std::max<Int>(4096, 2 * (k < 0 ? -k : k));
        return derivation_oracle(s, x, depth, w).elements.count(k) ? Verdict::True : Verdict::Unknown;
    }
    auto r = kleene_solve(s, budget);
    if (r.values[x].contains(k)) return Verdict::True;
    return r.exact ? Verdict::False : Verdict::Unknown;
}

namespace {

/// productive variables; Inter passes productivity through when `inter_free` (an over-approximation)
std::vector<char> productive(const EqSystem& s, bool inter_free) {
    std::vector<char> prod(s.names.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& i : s.incs) {
            if (prod[i.x]) continue;
            bool ok = i.kind == Inclusion::Const || (i.kind == Inclusion::Add && prod[i.y] && prod[i.z]) ||
                      (i.kind == Inclusion::Inter && inter_free && prod[i.y]);
            if (ok) {
                prod[i.x] = 1;
                changed = true;
            }
        }
    }
    return prod;
}

} // namespace

Verdict nonempty(const EqSystem& s, int x, std::size_t budget, NonemptyStats* stats) {
    NonemptyStats st;
    if (stats) *stats = st;
    // cheap exact answers: an upper bound that ignores the {0} filters, a lower bound without them
    auto up = productive(s, true);
    if (!up[x]) return Verdict::False;
    if (productive(s, false)[x]) return Verdict::True;
    // only inclusions feeding x with every operand possibly nonempty matter
    std::vector<std::vector<std::size_t>> by_x(s.names.size());
    for (std::size_t k = 0; k < s.incs.size(); ++k) {
        auto& i = s.incs[k];
        bool live = i.kind == Inclusion::Const || (i.kind == Inclusion::Inter && up[i.y]) ||
                    (i.kind == Inclusion::Add && up[i.y] && up[i.z]);
        if (live) by_x[i.x].push_back(k);
    }
    std::vector<char> cone(s.names.size(), 0);
    std::deque<int> cq{x};
    cone[x] = 1;
    while (!cq.empty()) {
        int v = cq.front();
        cq.pop_front();
        for (auto k : by_x[v]) {
            auto& i = s.incs[k];
            for (int w : {i.y, i.z})
                if (w >= 0 && !cone[w]) {
                    cone[w] = 1;
                    cq.push_back(w);
                }
        }
    }
    EqSystem res;
    res.names = s.names;
    res.index = s.index;
    std::vector<std::pair<int, int>> pending;
    for (std::size_t v = 0; v < s.names.size(); ++v) {
        if (!cone[v]) continue;
        for (auto k : by_x[v]) {
            auto& i = s.incs[k];
            if (i.kind == Inclusion::Inter)
                pending.push_back({i.x, i.y});
            else
                res.incs.push_back(i);
        }
    }
    std::vector<int> unknown_x;
    bool progress = true;
    while (progress) {
        progress = false;
        unknown_x.clear();
        std::optional<KleeneResult> kr;
        for (auto it = pending.begin(); it != pending.end();) {
            if (!kr) kr = kleene_solve(res, budget);
            if (kr->values[it->second].contains(0)) {
                res.add_const(it->first, 0);
                ++st.seeded;
                it = pending.erase(it);
                kr.reset();
                progress = true;
            } else {
                if (!kr->exact) {
                    unknown_x.push_back(it->first);
                    ++st.unknown_checks;
                }
                ++it;
            }
        }
    }
    if (stats) *stats = st;
    if (nonempty_intersection_free(res, x)) return Verdict::True;
    if (unknown_x.empty()) return Verdict::False;
    // could an unverified seed reach x?
    std::vector<std::vector<int>> g(s.names.size());
    for (auto& i : s.incs) {
        if (i.kind == Inclusion::Const) continue;
        g[i.y].push_back(i.x);
        if (i.kind == Inclusion::Add) g[i.z].push_back(i.x);
    }
    std::vector<char> seen(s.names.size(), 0);
    std::deque<int> q(unknown_x.begin(), unknown_x.end());
    for (int v : unknown_x) seen[v] = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        if (v == x) return Verdict::Unknown;
        for (int w : g[v])
            if (!seen[w]) {
                seen[w] = 1;
                q.push_back(w);
            }
    }
    return Verdict::False;
}

} // namespace tpda
