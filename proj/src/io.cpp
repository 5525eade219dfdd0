#include "tpda/io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "tpda/constraint.hpp"

namespace tpda {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

// ── Tokenizer ──

Lexer::Lexer(const std::string& s) {
    int line = 1, col = 1;
    std::size_t p = 0;
    auto adv = [&]() {
        if (s[p] == '\n') { ++line; col = 1; }
        else ++col;
        ++p;
    };
    auto wordch = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '~' || c == '-' ||
               c == '/' || c == '\'' || c == '+';
    };
    while (p < s.size()) {
        char c = s[p];
        if (std::isspace(static_cast<unsigned char>(c))) { adv(); continue; }
        if (c == '#' || (c == '/' && p + 1 < s.size() && s[p + 1] == '/')) {
            while (p < s.size() && s[p] != '\n') adv();
            continue;
        }
        Token t{Token::Word, "", line, col};
        if (c == '"') {
            t.kind = Token::String;
            adv();
            while (p < s.size() && s[p] != '"') {
                t.text += s[p];
                adv();
            }
            if (p >= s.size()) throw ParseError("unterminated string", t.line, t.col);
            adv();
        } else if (wordch(c)) {
            while (p < s.size() && wordch(s[p])) {
                t.text += s[p];
                adv();
            }
        } else {
            t.kind = Token::Punct;
            t.text = c;
            adv();
        }
        toks_.push_back(std::move(t));
    }
    toks_.push_back({Token::End, "", line, col});
}

bool Lexer::accept(const std::string& t) {
    if (peek().kind != Token::End && peek().kind != Token::String && peek().text == t) {
        ++pos_;
        return true;
    }
    return false;
}

void Lexer::expect(const std::string& t) {
    if (!accept(t)) fail("expected '" + t + "' but found '" + peek().text + "'");
}

std::string Lexer::word(const char* what) {
    if (peek().kind != Token::Word) fail(std::string("expected ") + what);
    return next().text;
}

std::string Lexer::string_lit(const char* what) {
    if (peek().kind != Token::String) fail(std::string("expected quoted ") + what);
    return next().text;
}

void Lexer::fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().col); }

ZoneDNF parse_constraint_at(const Token& tok, std::size_t dim) {
    // columns inside the string start one after the quote
    return atoms_to_zones(parse_atoms(tok.text, positional_resolver(dim), tok.line, tok.col + 1), dim);
}

namespace {

std::size_t parse_nat(Lexer& lx, const char* what) {
    const Token& t = lx.peek();
    std::string w = lx.word(what);
    for (char c : w)
        if (!std::isdigit(static_cast<unsigned char>(c))) throw ParseError(std::string("expected ") + what, t.line, t.col);
    return std::stoul(w);
}

std::vector<std::string> parse_label_list(Lexer& lx) {
    std::vector<std::string> out;
    lx.expect("[");
    while (!lx.accept("]")) {
        out.push_back(lx.word("label"));
        lx.accept(",");
    }
    return out;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

} // namespace

DefinableSet parse_set_body(Lexer& lx, const DefinableSet* base) {
    DefinableSet s;
    lx.expect("{");
    while (!lx.accept("}")) {
        Token at = lx.peek();
        lx.expect("loc");
        std::string label = lx.word("location label");
        std::size_t dim = 0;
        bool have_dim = false;
        if (lx.accept("dim")) {
            dim = parse_nat(lx, "dimension");
            have_dim = true;
        } else if (base) {
            auto* l = base->find(label);
            if (!l) throw ParseError("unknown state '" + label + "'", at.line, at.col);
            dim = l->dim;
            have_dim = true;
        }
        if (!have_dim) throw ParseError("location '" + label + "' needs a dimension", at.line, at.col);
        ZoneDNF c = ZoneDNF::top(dim);
        if (lx.accept("where")) {
            if (lx.peek().kind != Token::String) lx.fail("expected quoted constraint");
            c = parse_constraint_at(lx.next(), dim);
        }
        lx.expect(";");
        try {
            s.add(label, dim, c);
        } catch (const std::invalid_argument& e) {
            throw ParseError(e.what(), at.line, at.col);
        }
    }
    return s;
}

// ── Set files ──

SetFile parse_set_file(const std::string& text) {
    Lexer lx(text);
    SetFile f;
    while (!lx.at_end()) {
        if (lx.accept("set")) {
            std::string name = lx.word("set name");
            f.sets.push_back({name, parse_set_body(lx)});
        } else if (lx.accept("rel")) {
            Token at = lx.peek();
            std::string name = lx.word("relation name");
            lx.expect("arity");
            std::size_t ar = parse_nat(lx, "arity");
            DefinableRelation r;
            lx.expect("over");
            lx.expect("(");
            while (!lx.accept(")")) {
                std::string sn = lx.word("set name");
                bool found = false;
                for (auto& [n, s] : f.sets)
                    if (n == sn) {
                        r.index_sets.push_back(s);
                        found = true;
                    }
                if (!found) lx.fail("unknown set '" + sn + "'");
                lx.accept(",");
            }
            if (r.arity() != ar) throw ParseError("arity does not match index sets", at.line, at.col);
            lx.expect("{");
            while (!lx.accept("}")) {
                Token e = lx.peek();
                lx.expect("entry");
                lx.expect("(");
                std::vector<std::string> key;
                while (!lx.accept(")")) {
                    key.push_back(lx.word("label"));
                    lx.accept(",");
                }
                std::size_t d;
                try {
                    d = r.dim_of(key);
                } catch (const std::exception& ex) {
                    throw ParseError(ex.what(), e.line, e.col);
                }
                ZoneDNF c = ZoneDNF::top(d);
                if (lx.accept("where")) {
                    if (lx.peek().kind != Token::String) lx.fail("expected quoted constraint");
                    c = parse_constraint_at(lx.next(), d);
                }
                lx.expect(";");
                r.add(key, c);
            }
            f.relations.push_back({name, r});
        } else {
            lx.fail("expected 'set' or 'rel'");
        }
    }
    return f;
}

std::string print_set(const std::string& name, const DefinableSet& s) {
    std::ostringstream o;
    if (!name.empty()) o << "set " << name << " ";
    o << "{\n";
    for (auto& l : s.locs) {
        o << "  loc " << l.label << " dim " << l.dim;
        if (!(l.constraint.disjuncts.size() == 1 && l.constraint.str() == "true"))
            o << " where " << quote(l.constraint.str());
        o << ";\n";
    }
    o << "}\n";
    return o.str();
}

// ── Automata ──

TrPDA parse_trpda(const std::string& text) {
    Lexer lx(text);
    TrPDA a;
    bool wrapped = false;
    if (lx.accept("trpda")) {
        if (lx.peek().kind == Token::Word) lx.next();
        lx.expect("{");
        wrapped = true;
    }
    bool have_rules = false;
    while (!lx.at_end() && !(wrapped && lx.peek().text == "}")) {
        Token at = lx.peek();
        std::string sec = lx.word("section name");
        if (sec == "states") a.states = parse_set_body(lx);
        else if (sec == "input") a.input = parse_set_body(lx);
        else if (sec == "stack") a.stack = parse_set_body(lx);
        else if (sec == "initial") a.initial = parse_set_body(lx, &a.states);
        else if (sec == "final") a.final = parse_set_body(lx, &a.states);
        else if (sec == "rules") {
            have_rules = true;
            lx.expect("{");
            while (!lx.accept("}")) {
                Token rt = lx.peek();
                lx.expect("rule");
                Rule r;
                bool from = false, to = false;
                std::string where;
                Token wt;
                bool have_where = false;
                while (!lx.accept(";")) {
                    if (lx.accept("where")) {
                        if (lx.peek().kind != Token::String) lx.fail("expected quoted constraint");
                        wt = lx.next();
                        have_where = true;
                        continue;
                    }
                    std::string key = lx.word("rule field");
                    lx.expect("=");
                    if (key == "from") { r.from = lx.word("state label"); from = true; }
                    else if (key == "to") { r.to = lx.word("state label"); to = true; }
                    else if (key == "pop") r.pop = parse_label_list(lx);
                    else if (key == "push") r.push = parse_label_list(lx);
                    else if (key == "in") {
                        std::string v = lx.word("input label");
                        if (v != "eps") r.input = v;
                    } else if (key == "name") r.name = lx.word("rule name");
                    else throw ParseError("unknown rule field '" + key + "'", rt.line, rt.col);
                }
                if (!from || !to) throw ParseError("rule needs from= and to=", rt.line, rt.col);
                std::size_t d;
                try {
                    d = a.rule_dim(r);
                } catch (const std::exception& e) {
                    throw ParseError(e.what(), rt.line, rt.col);
                }
                r.guard = have_where ? parse_constraint_at(wt, d) : ZoneDNF::top(d);
                a.rules.push_back(std::move(r));
            }
        } else {
            throw ParseError("unknown section '" + sec + "'", at.line, at.col);
        }
    }
    if (wrapped) lx.expect("}");
    if (!have_rules && a.states.locs.empty()) lx.fail("empty automaton");
    try {
        a.check();
    } catch (const std::exception& e) {
        throw ParseError(e.what(), 1, 1);
    }
    return a;
}

namespace {

std::string list(const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + v[k];
    return s + "]";
}

std::string section(const std::string& name, const DefinableSet& s) {
    std::string body = print_set("", s);
    return name + " " + body;
}

} // namespace

std::string print_trpda(const TrPDA& a) {
    std::ostringstream o;
    o << section("states", a.states) << section("input", a.input) << section("stack", a.stack)
      << section("initial", a.initial) << section("final", a.final);
    o << "rules {\n";
    for (auto& r : a.rules) {
        o << "  rule from=" << r.from << " pop=" << list(r.pop) << " in=" << (r.input ? *r.input : "eps")
          << " to=" << r.to << " push=" << list(r.push);
        if (!r.name.empty()) o << " name=" << r.name;
        o << " where " << quote(r.guard.str()) << ";\n";
    }
    o << "}\n";
    return o.str();
}

// ── Grammars ──

TrCFG parse_trcfg(const std::string& text) {
    Lexer lx(text);
    TrCFG g;
    bool wrapped = false;
    if (lx.accept("trcfg")) {
        if (lx.peek().kind == Token::Word) lx.next();
        lx.expect("{");
        wrapped = true;
    }
    bool have_start = false;
    while (!lx.at_end() && !(wrapped && lx.peek().text == "}")) {
        Token at = lx.peek();
        std::string sec = lx.word("section name");
        if (sec == "symbols") g.symbols = parse_set_body(lx);
        else if (sec == "input") g.alphabet = parse_set_body(lx);
        else if (sec == "start") {
            g.start = lx.word("start symbol");
            lx.expect(";");
            have_start = true;
        } else if (sec == "productions") {
            lx.expect("{");
            while (!lx.accept("}")) {
                Token pt = lx.peek();
                lx.expect("prod");
                Production p;
                bool have_where = false;
                Token wt;
                while (!lx.accept(";")) {
                    if (lx.accept("where")) {
                        if (lx.peek().kind != Token::String) lx.fail("expected quoted constraint");
                        wt = lx.next();
                        have_where = true;
                        continue;
                    }
                    std::string key = lx.word("production field");
                    lx.expect("=");
                    if (key == "from") p.lhs = lx.word("symbol");
                    else if (key == "to") p.rhs = parse_label_list(lx);
                    else if (key == "in") {
                        std::string v = lx.word("input label");
                        if (v != "eps") p.input = v;
                    } else throw ParseError("unknown production field '" + key + "'", pt.line, pt.col);
                }
                std::size_t d = 0;
                try {
                    d = g.symbols.dim_of(p.lhs);
                    if (p.input) d += g.alphabet.dim_of(*p.input);
                    for (auto& s : p.rhs) d += g.symbols.dim_of(s);
                } catch (const std::exception& e) {
                    throw ParseError(e.what(), pt.line, pt.col);
                }
                p.guard = have_where ? parse_constraint_at(wt, d) : ZoneDNF::top(d);
                g.productions.push_back(std::move(p));
            }
        } else {
            throw ParseError("unknown section '" + sec + "'", at.line, at.col);
        }
    }
    if (wrapped) lx.expect("}");
    if (!have_start) throw ParseError("grammar needs a start symbol", 1, 1);
    if (!g.symbols.find(g.start)) throw ParseError("unknown start symbol '" + g.start + "'", 1, 1);
    return g;
}

std::string print_trcfg(const TrCFG& g) {
    std::ostringstream o;
    o << section("symbols", g.symbols) << section("input", g.alphabet) << "start " << g.start << ";\n";
    o << "productions {\n";
    for (auto& p : g.productions) {
        o << "  prod from=" << p.lhs << " in=" << (p.input ? *p.input : "eps") << " to=" << list(p.rhs)
          << " where " << quote(p.guard.str()) << ";\n";
    }
    o << "}\n";
    return o.str();
}

// ── Words ──

TimedWord parse_word(const std::string& text) {
    Lexer lx(text);
    TimedWord w;
    bool wrapped = lx.accept("word");
    if (wrapped) lx.expect("{");
    while (!lx.at_end() && !(wrapped && lx.peek().text == "}")) {
        lx.expect("(");
        Element e;
        e.label = lx.word("letter label");
        if (lx.accept(";")) {
            while (lx.peek().text != ")") {
                Token t = lx.peek();
                std::string v = lx.word("number");
                try {
                    e.point.push_back(parse_rational(v));
                } catch (const std::exception&) {
                    throw ParseError("bad number '" + v + "'", t.line, t.col);
                }
                lx.accept(",");
            }
        }
        lx.expect(")");
        w.push_back(std::move(e));
    }
    if (wrapped) lx.expect("}");
    return w;
}

std::string print_word(const TimedWord& w) {
    std::string s = "word {";
    for (auto& e : w) s += " " + e.str();
    return s + " }";
}

} // namespace tpda
