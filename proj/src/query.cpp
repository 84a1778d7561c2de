#include "sbk/query.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace sbk::query {

using triples::Term;
using triples::Triple;

namespace {

enum class TokKind {
    Keyword,  // SELECT / WHERE / FILTER / PREFIX (case-insensitive)
    Var,      // ?name
    PName,    // prefix:local
    A,        // bare 'a'
    Literal,  // "..."
    IriRef,   // <...>
    LBrace, RBrace, LParen, RParen, Dot, Eq,
    End,
};

struct Token {
    TokKind kind;
    std::string text;  // keyword upper-cased; var without '?'; literal unescaped
    int line, col;
};

bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_ws();
        int line = line_, col = col_;
        if (pos_ >= text_.size()) return {TokKind::End, "", line, col};
        char c = text_[pos_];

        switch (c) {
            case '{': advance(); return {TokKind::LBrace, "{", line, col};
            case '}': advance(); return {TokKind::RBrace, "}", line, col};
            case '(': advance(); return {TokKind::LParen, "(", line, col};
            case ')': advance(); return {TokKind::RParen, ")", line, col};
            case '.': advance(); return {TokKind::Dot, ".", line, col};
            case '=': advance(); return {TokKind::Eq, "=", line, col};
            case '?': {
                advance();
                std::string name = take_name();
                if (name.empty())
                    throw SyntaxError("'?' without a variable name", line, col, "variable name");
                return {TokKind::Var, name, line, col};
            }
            case '"': {
                advance();
                std::string value;
                while (pos_ < text_.size() && text_[pos_] != '"') {
                    char d = text_[pos_];
                    if (d == '\n') break;
                    if (d == '\\' && pos_ + 1 < text_.size()) {
                        advance();
                        d = text_[pos_];
                    }
                    value.push_back(d);
                    advance();
                }
                if (pos_ >= text_.size() || text_[pos_] != '"')
                    throw SyntaxError("unterminated string literal", line, col, "closing '\"'");
                advance();
                return {TokKind::Literal, value, line, col};
            }
            case '<': {
                advance();
                std::string value;
                while (pos_ < text_.size() && text_[pos_] != '>' && text_[pos_] != '\n') {
                    value.push_back(text_[pos_]);
                    advance();
                }
                if (pos_ >= text_.size() || text_[pos_] != '>')
                    throw SyntaxError("unterminated IRI reference", line, col, "closing '>'");
                advance();
                return {TokKind::IriRef, value, line, col};
            }
            default: break;
        }

        if (name_char(c)) {
            std::string name = take_name();
            if (pos_ < text_.size() && text_[pos_] == ':') {
                advance();
                std::string local = take_name();
                return {TokKind::PName, name + ":" + local, line, col};
            }
            std::string upper = name;
            std::transform(upper.begin(), upper.end(), upper.begin(),
                           [](unsigned char ch) { return std::toupper(ch); });
            if (upper == "SELECT" || upper == "WHERE" || upper == "FILTER" || upper == "PREFIX")
                return {TokKind::Keyword, upper, line, col};
            if (name == "a") return {TokKind::A, "a", line, col};
            throw SyntaxError("unexpected token '" + name + "'", line, col,
                              "a keyword, variable, or prefixed name");
        }
        throw SyntaxError("unexpected character '" + std::string(1, c) + "'", line, col);
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {  // comment to end of line
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string take_name() {
        std::string out;
        while (pos_ < text_.size() && name_char(text_[pos_])) {
            out.push_back(text_[pos_]);
            advance();
        }
        return out;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;
};

constexpr int kMaxGroupDepth = 64;

class Parser {
public:
    Parser(std::string_view text, const triples::Namespaces& ns) : lexer_(text) {
        ast_.prefixes["bot"] = triples::Namespaces::bot_ns();
        ast_.prefixes["rdf"] = triples::Namespaces::rdf_ns();
        ast_.prefixes[ns.instance_prefix] = ns.instance_ns;
        shift();
    }

    QueryAst parse() {
        while (tok_.kind == TokKind::Keyword && tok_.text == "PREFIX") parse_prefix_decl();
        expect_keyword("SELECT");
        while (tok_.kind == TokKind::Var) {
            ast_.select_vars.push_back(tok_.text);
            shift();
        }
        if (ast_.select_vars.empty())
            fail("SELECT needs at least one variable", "'?variable'");
        expect_keyword("WHERE");
        expect(TokKind::LBrace, "'{'");
        parse_group(1);
        if (tok_.kind != TokKind::End) fail("trailing input after query", "end of input");
        check_semantics();
        return std::move(ast_);
    }

private:
    void shift() { tok_ = lexer_.next(); }

    [[noreturn]] void fail(const std::string& msg, const std::string& expected = {}) {
        throw SyntaxError(msg, tok_.line, tok_.col, expected);
    }

    void expect(TokKind k, const std::string& what) {
        if (tok_.kind != k) fail("unexpected " + describe(tok_), what);
        shift();
    }

    void expect_keyword(const std::string& kw) {
        if (tok_.kind != TokKind::Keyword || tok_.text != kw)
            fail("unexpected " + describe(tok_), "'" + kw + "'");
        shift();
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case TokKind::End: return "end of input";
            case TokKind::Var: return "variable '?" + t.text + "'";
            case TokKind::Literal: return "string literal";
            default: return "'" + t.text + "'";
        }
    }

    void parse_prefix_decl() {
        shift();  // PREFIX
        if (tok_.kind != TokKind::PName) fail("unexpected " + describe(tok_), "'prefix:'");
        std::string name = tok_.text;
        if (name.empty() || name.back() != ':')
            fail("PREFIX declaration needs a bare 'prefix:'", "'prefix:'");
        name.pop_back();
        shift();
        if (tok_.kind != TokKind::IriRef) fail("unexpected " + describe(tok_), "'<namespace>'");
        ast_.prefixes[name] = tok_.text;
        shift();
    }

    void parse_group(int depth) {
        if (depth > kMaxGroupDepth) fail("group nesting too deep");
        while (true) {
            switch (tok_.kind) {
                case TokKind::LBrace:
                    shift();
                    parse_group(depth + 1);
                    break;
                case TokKind::RBrace:
                    shift();
                    return;
                case TokKind::Keyword:
                    if (tok_.text == "FILTER") {
                        parse_filter();
                        break;
                    }
                    fail("unexpected " + describe(tok_), "a triple pattern, FILTER, or '}'");
                case TokKind::Var:
                case TokKind::PName:
                case TokKind::IriRef:
                    parse_triple();
                    break;
                default:
                    fail("unexpected " + describe(tok_), "a triple pattern, FILTER, or '}'");
            }
        }
    }

    void parse_triple() {
        TriplePattern p;
        p.subject = parse_term(/*predicate_position=*/false, /*allow_literal=*/false);
        p.predicate = parse_term(true, false);
        p.object = parse_term(false, true);
        ast_.patterns.push_back(std::move(p));
        if (tok_.kind == TokKind::Dot) shift();  // trailing '.' optional
    }

    void parse_filter() {
        shift();  // FILTER
        expect(TokKind::LParen, "'('");
        if (tok_.kind != TokKind::Var) fail("unexpected " + describe(tok_), "'?variable'");
        EqualityFilter f;
        f.variable = tok_.text;
        shift();
        expect(TokKind::Eq, "'='");
        f.value = parse_term(false, true);
        if (f.value.kind == PatternTerm::Kind::Variable)
            fail("FILTER compares a variable against a fixed term", "prefixed name or literal");
        expect(TokKind::RParen, "')'");
        ast_.filters.push_back(std::move(f));
        if (tok_.kind == TokKind::Dot) shift();
    }

    PatternTerm parse_term(bool predicate_position, bool allow_literal) {
        PatternTerm out;
        switch (tok_.kind) {
            case TokKind::Var:
                out = {PatternTerm::Kind::Variable, tok_.text};
                break;
            case TokKind::PName:
                out = {PatternTerm::Kind::Iri, expand(tok_)};
                break;
            case TokKind::IriRef:
                out = {PatternTerm::Kind::Iri, tok_.text};
                break;
            case TokKind::A:
                if (!predicate_position)
                    fail("'a' is only valid as a predicate", "variable or prefixed name");
                out = {PatternTerm::Kind::Iri, triples::Namespaces::rdf_type()};
                break;
            case TokKind::Literal:
                if (!allow_literal)
                    fail("string literal is only valid as an object", "variable or prefixed name");
                out = {PatternTerm::Kind::Literal, tok_.text};
                break;
            default:
                fail("unexpected " + describe(tok_),
                     allow_literal ? "variable, prefixed name, or literal"
                                   : "variable or prefixed name");
        }
        shift();
        return out;
    }

    std::string expand(const Token& t) const {
        auto colon = t.text.find(':');
        std::string prefix = t.text.substr(0, colon);
        auto it = ast_.prefixes.find(prefix);
        if (it == ast_.prefixes.end()) throw UnknownPrefixError(prefix, t.line, t.col);
        return it->second + t.text.substr(colon + 1);
    }

    void check_semantics() {
        if (ast_.patterns.empty())
            throw SyntaxError("empty pattern list", tok_.line, tok_.col, "at least one triple pattern");
        std::set<std::string> pattern_vars;
        for (const auto& p : ast_.patterns) {
            for (const PatternTerm* t : {&p.subject, &p.predicate, &p.object})
                if (t->kind == PatternTerm::Kind::Variable) pattern_vars.insert(t->text);
        }
        for (const auto& v : ast_.select_vars) {
            if (!pattern_vars.count(v))
                throw SyntaxError("selected variable ?" + v + " appears in no pattern",
                                  tok_.line, tok_.col);
        }
        for (const auto& f : ast_.filters) {
            if (!pattern_vars.count(f.variable))
                throw SyntaxError("filtered variable ?" + f.variable + " appears in no pattern",
                                  tok_.line, tok_.col);
        }
    }

    Lexer lexer_;
    Token tok_{TokKind::End, "", 1, 1};
    QueryAst ast_;
};

}  // namespace

QueryAst parse_query(std::string_view text, const triples::Namespaces& ns) {
    return Parser(text, ns).parse();
}

namespace {

using Binding = std::map<std::string, Term>;

bool match_term(const PatternTerm& p, const Term& t, Binding& b) {
    switch (p.kind) {
        case PatternTerm::Kind::Iri:
            return t.kind == Term::Kind::Iri && t.text == p.text;
        case PatternTerm::Kind::Literal:
            return t.kind == Term::Kind::Literal && t.text == p.text;
        case PatternTerm::Kind::Variable: {
            auto it = b.find(p.text);
            if (it != b.end()) return it->second == t;
            b.emplace(p.text, t);
            return true;
        }
    }
    return false;
}

Term filter_value_term(const PatternTerm& v) {
    return v.kind == PatternTerm::Kind::Literal ? triples::literal(v.text)
                                                : triples::iri(v.text);
}

}  // namespace

ResultTable execute(const QueryAst& ast, const std::vector<Triple>& triples) {
    std::vector<Binding> rows{Binding{}};
    for (const TriplePattern& p : ast.patterns) {
        std::vector<Binding> next;
        for (const Binding& row : rows) {
            for (const Triple& t : triples) {
                Binding candidate = row;
                if (match_term(p.subject, t.subject, candidate) &&
                    match_term(p.predicate, t.predicate, candidate) &&
                    match_term(p.object, t.object, candidate)) {
                    next.push_back(std::move(candidate));
                }
            }
        }
        rows = std::move(next);
        if (rows.empty()) break;
    }

    for (const EqualityFilter& f : ast.filters) {
        const Term want = filter_value_term(f.value);
        std::erase_if(rows, [&](const Binding& b) {
            auto it = b.find(f.variable);
            return it == b.end() || !(it->second == want);
        });
    }

    ResultTable table;
    table.columns = ast.select_vars;
    table.rows.reserve(rows.size());
    for (const Binding& b : rows) {
        std::vector<Term> row;
        row.reserve(table.columns.size());
        for (const std::string& v : table.columns) row.push_back(b.at(v));
        table.rows.push_back(std::move(row));
    }
    std::sort(table.rows.begin(), table.rows.end());
    table.rows.erase(std::unique(table.rows.begin(), table.rows.end()), table.rows.end());
    return table;
}

ResultTable execute(const QueryAst& ast, const topology::TopologyGraph& g,
                    const triples::Namespaces& ns) {
    return execute(ast, triples::as_triples(g, ns));
}

std::string to_csv(const ResultTable& table, const triples::Namespaces& ns) {
    auto escape = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += "\"\"";
            else out.push_back(c);
        }
        out += "\"";
        return out;
    };
    std::ostringstream out;
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out << (i ? "," : "") << escape(table.columns[i]);
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << escape(ns.compact(row[i]));
        out << "\n";
    }
    return out.str();
}

}  // namespace sbk::query
