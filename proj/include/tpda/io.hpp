#pragma once
// Text formats for sets, automata, grammars and words.

#include <map>
#include <string>
#include <vector>

#include "tpda/trpda.hpp"

namespace tpda {

struct SetFile {
    std::vector<std::pair<std::string, DefinableSet>> sets;
    std::vector<std::pair<std::string, DefinableRelation>> relations;
};

SetFile parse_set_file(const std::string& text);
TrPDA parse_trpda(const std::string& text);
TrCFG parse_trcfg(const std::string& text);
TimedWord parse_word(const std::string& text);

std::string print_set(const std::string& name, const DefinableSet& s);
std::string print_trpda(const TrPDA& a);
std::string print_trcfg(const TrCFG& g);
std::string print_word(const TimedWord& w);

std::string read_file(const std::string& path);

// ── Shared tokenizer ──

struct Token {
    enum Kind { Word, String, Punct, End } kind;
    std::string text;
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& text);
    const Token& peek() const { return toks_[pos_]; }
    Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
    bool accept(const std::string& t);
    void expect(const std::string& t);
    std::string word(const char* what);
    std::string string_lit(const char* what);
    [[noreturn]] void fail(const std::string& msg) const;
    bool at_end() const { return peek().kind == Token::End; }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

/// `loc LABEL [dim D] [where "C"];` entries until the closing brace; dims default from `base`
DefinableSet parse_set_body(Lexer& lx, const DefinableSet* base = nullptr);
ZoneDNF parse_constraint_at(const Token& tok, std::size_t dim);

} // namespace tpda
