#include "tpda/constraint.hpp"

#include <cctype>
#include <map>

namespace tpda {

namespace {

// ── Lexer ──

struct Tok {
    enum Kind { Ident, Num, Op, LParen, RParen, And, Or, Plus, Minus, End } kind;
    std::string text;
    int line, col;
};

std::vector<Tok> lex(std::string_view s, int line, int col) {
    std::vector<Tok> out;
    std::size_t p = 0;
    auto adv = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (s[p] == '\n') { ++line; col = 1; }
            else ++col;
            ++p;
        }
    };
    while (p < s.size()) {
        char c = s[p];
        if (std::isspace(static_cast<unsigned char>(c))) { adv(1); continue; }
        int l = line, cc = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t q = p;
            while (q < s.size() && (std::isalnum(static_cast<unsigned char>(s[q])) || s[q] == '_' || s[q] == '\'' || s[q] == '.'))
                ++q;
            out.push_back({Tok::Ident, std::string(s.substr(p, q - p)), l, cc});
            adv(q - p);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t q = p;
            while (q < s.size() && std::isdigit(static_cast<unsigned char>(s[q]))) ++q;
            out.push_back({Tok::Num, std::string(s.substr(p, q - p)), l, cc});
            adv(q - p);
        } else if (c == '<' || c == '>' || c == '=' || c == '!') {
            std::size_t n = (p + 1 < s.size() && s[p + 1] == '=') ? 2 : 1;
            std::string t(s.substr(p, n));
            if (t == "!") throw ParseError("unexpected '!'", l, cc);
            out.push_back({Tok::Op, t, l, cc});
            adv(n);
        } else if (c == '(') { out.push_back({Tok::LParen, "(", l, cc}); adv(1); }
        else if (c == ')') { out.push_back({Tok::RParen, ")", l, cc}); adv(1); }
        else if (c == '&' || c == ',') {
            out.push_back({Tok::And, "&", l, cc});
            adv((c == '&' && p + 1 < s.size() && s[p + 1] == '&') ? 2 : 1);
        } else if (c == '|') {
            out.push_back({Tok::Or, "|", l, cc});
            adv((p + 1 < s.size() && s[p + 1] == '|') ? 2 : 1);
        } else if (c == '+') { out.push_back({Tok::Plus, "+", l, cc}); adv(1); }
        else if (c == '-') { out.push_back({Tok::Minus, "-", l, cc}); adv(1); }
        else throw ParseError(std::string("unexpected character '") + c + "'", l, cc);
    }
    out.push_back({Tok::End, "", line, col});
    return out;
}

RelOp flip(RelOp op) {
    switch (op) {
        case RelOp::Lt: return RelOp::Gt;
        case RelOp::Le: return RelOp::Ge;
        case RelOp::Ge: return RelOp::Le;
        case RelOp::Gt: return RelOp::Lt;
        default: return op;
    }
}

// ── Recursive descent to DNF ──

class Parser {
public:
    Parser(std::vector<Tok> toks, const VarResolver& r) : t_(std::move(toks)), resolve_(r) {}

    AtomDNF parse() {
        AtomDNF d = expr();
        if (peek().kind != Tok::End) fail("trailing input '" + peek().text + "'");
        return d;
    }

private:
    std::vector<Tok> t_;
    std::size_t p_ = 0;
    const VarResolver& resolve_;

    const Tok& peek() const { return t_[p_]; }
    [[noreturn]] void fail(const std::string& m) const { throw ParseError(m, peek().line, peek().col); }

    AtomDNF expr() {
        AtomDNF d = term();
        while (peek().kind == Tok::Or) {
            ++p_;
            AtomDNF e = term();
            d.insert(d.end(), e.begin(), e.end());
        }
        return d;
    }

    AtomDNF term() {
        AtomDNF d = factor();
        while (peek().kind == Tok::And) {
            ++p_;
            AtomDNF e = factor();
            AtomDNF r;
            for (auto& a : d)
                for (auto& b : e) {
                    auto c = a;
                    c.insert(c.end(), b.begin(), b.end());
                    r.push_back(std::move(c));
                }
            d = std::move(r);
        }
        return d;
    }

    AtomDNF factor() {
        const Tok& t = peek();
        if (t.kind == Tok::LParen) {
            ++p_;
            AtomDNF d = expr();
            if (peek().kind != Tok::RParen) fail("expected ')'");
            ++p_;
            return d;
        }
        if (t.kind == Tok::Ident && t.text == "true") { ++p_; return AtomDNF{{}}; }
        if (t.kind == Tok::Ident && t.text == "false") { ++p_; return AtomDNF{}; }
        return atom();
    }

    // sum of +-var and +-int; returns coefficients and constant
    void linear(std::map<int, Int>& coef, Int& c, Int sign) {
        bool first = true;
        while (true) {
            Int s = 1;
            if (peek().kind == Tok::Plus) { ++p_; }
            else if (peek().kind == Tok::Minus) { ++p_; s = -1; }
            else if (!first) break;
            const Tok& t = peek();
            if (t.kind == Tok::Num) {
                Int v;
                try { v = std::stoll(t.text); } catch (...) { fail("integer constant out of range"); }
                c = checked_add(c, checked_mul(sign * s, v));
                ++p_;
            } else if (t.kind == Tok::Ident) {
                auto idx = resolve_(t.text);
                if (!idx) fail("unknown variable '" + t.text + "'");
                coef[*idx] += sign * s;
                ++p_;
            } else {
                fail("expected variable or integer");
            }
            first = false;
        }
    }

    AtomDNF atom() {
        std::map<int, Int> coef;
        Int c = 0;
        Tok start = peek();
        linear(coef, c, 1);
        if (peek().kind != Tok::Op) fail("expected comparison operator");
        std::string ops = peek().text;
        ++p_;
        RelOp op;
        if (ops == "<") op = RelOp::Lt;
        else if (ops == "<=") op = RelOp::Le;
        else if (ops == ">") op = RelOp::Gt;
        else if (ops == ">=") op = RelOp::Ge;
        else if (ops == "=" || ops == "==") op = RelOp::Eq;
        else if (ops == "!=") op = RelOp::Ne;
        else fail("bad operator '" + ops + "'");
        linear(coef, c, -1);
        // now: sum coef*x + c op 0
        int pos = -1, neg = -1;
        for (auto [v, k] : coef) {
            if (k == 0) continue;
            if (k == 1 && pos < 0) pos = v;
            else if (k == -1 && neg < 0) neg = v;
            else throw ParseError("not a difference constraint", start.line, start.col);
        }
        Int k = checked_neg(c);
        Atom a;
        if (pos >= 0) {
            a = Atom{pos, neg, op, k};
        } else if (neg >= 0) {
            a = Atom{neg, -1, flip(op), checked_neg(k)};
        } else {
            // constant comparison
            bool ok = false;
            switch (op) {
                case RelOp::Lt: ok = 0 < k; break;
                case RelOp::Le: ok = 0 <= k; break;
                case RelOp::Eq: ok = 0 == k; break;
                case RelOp::Ge: ok = 0 >= k; break;
                case RelOp::Gt: ok = 0 > k; break;
                case RelOp::Ne: ok = 0 != k; break;
            }
            return ok ? AtomDNF{{}} : AtomDNF{};
        }
        if (a.op == RelOp::Ne) {
            Atom lo = a, hi = a;
            lo.op = RelOp::Lt;
            hi.op = RelOp::Gt;
            return AtomDNF{{lo}, {hi}};
        }
        return AtomDNF{{a}};
    }
};

} // namespace

AtomDNF parse_atoms(std::string_view text, const VarResolver& resolve, int line0, int col0) {
    Parser p(lex(text, line0, col0), resolve);
    return p.parse();
}

void add_atom(Zone& z, int i, int j, RelOp op, Int k) {
    auto I = static_cast<std::size_t>(i), J = static_cast<std::size_t>(j);
    switch (op) {
        case RelOp::Lt: z.add(I, J, make_bound(k, true)); break;
        case RelOp::Le: z.add(I, J, make_bound(k, false)); break;
        case RelOp::Gt: z.add(J, I, make_bound(checked_neg(k), true)); break;
        case RelOp::Ge: z.add(J, I, make_bound(checked_neg(k), false)); break;
        case RelOp::Eq:
            z.add(I, J, make_bound(k, false));
            z.add(J, I, make_bound(checked_neg(k), false));
            break;
        case RelOp::Ne: throw std::logic_error("!= must be split before building zones");
    }
}

ZoneDNF atoms_to_zones(const AtomDNF& dnf, std::size_t dim, int reference) {
    ZoneDNF r = ZoneDNF::bottom(dim);
    for (auto& conj : dnf) {
        Zone z(dim);
        for (auto& a : conj) {
            int j = a.j;
            if (j < 0) {
                if (reference < 0) throw std::invalid_argument("constraint compares a variable with a constant");
                j = reference;
            }
            if (a.i == j) {
                // x - x op k is a constant test
                bool ok = a.op == RelOp::Lt ? 0 < a.k : a.op == RelOp::Le ? 0 <= a.k : a.op == RelOp::Eq ? a.k == 0
                        : a.op == RelOp::Ge ? 0 >= a.k : 0 > a.k;
                if (!ok) { z = Zone(dim); if (dim == 0) goto skip; z.add(0, 0, kLtZero); }
                continue;
            }
            add_atom(z, a.i, j, a.op, a.k);
        }
        if (z.canonicalize()) r.disjuncts.push_back(std::move(z));
    skip:;
    }
    r.canonicalize();
    r.raw_max = atoms_max_constant(dnf);
    return r;
}

Int atoms_max_constant(const AtomDNF& dnf) {
    Int m = 0;
    for (auto& c : dnf)
        for (auto& a : c) m = std::max(m, std::abs(a.k));
    return m;
}

VarResolver positional_resolver(std::size_t dim) {
    return [dim](const std::string& n) -> std::optional<int> {
        if (n.size() < 2 || n[0] != 'x') return std::nullopt;
        for (std::size_t k = 1; k < n.size(); ++k)
            if (!std::isdigit(static_cast<unsigned char>(n[k]))) return std::nullopt;
        long v = std::stol(n.substr(1));
        if (v < 1 || static_cast<std::size_t>(v) > dim) return std::nullopt;
        return static_cast<int>(v - 1);
    };
}

ZoneDNF parse_constraint(std::string_view text, std::size_t dim) {
    return atoms_to_zones(parse_atoms(text, positional_resolver(dim)), dim);
}

} // namespace tpda
