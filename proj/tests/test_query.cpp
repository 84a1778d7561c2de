#include "sbk/query.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sbk/errors.hpp"
#include "sbk/topology.hpp"
#include "sbk/triples.hpp"
#include "testutil.hpp"

using namespace sbk;
using namespace testutil;
using query::PatternTerm;
using query::QueryAst;
using query::ResultTable;
using query::TriplePattern;
using triples::Term;
using triples::Triple;

namespace {

std::string data_path(const std::string& name) { return std::string(SBK_DATA_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool matches(const PatternTerm& p, const Term& t,
             const std::map<std::string, Term>& binding) {
    switch (p.kind) {
        case PatternTerm::Kind::Variable: {
            auto it = binding.find(p.text);
            return it == binding.end() || it->second == t;
        }
        case PatternTerm::Kind::Iri:
            return t.kind == Term::Kind::Iri && t.text == p.text;
        case PatternTerm::Kind::Literal:
            return t.kind == Term::Kind::Literal && t.text == p.text;
    }
    return false;
}

void bind(const PatternTerm& p, const Term& t, std::map<std::string, Term>& binding) {
    if (p.kind == PatternTerm::Kind::Variable) binding.emplace(p.text, t);
}

// Exhaustive join oracle: depth-first over patterns, no indexing, no
// ordering tricks. Shares nothing with the engine under test.
void oracle_join(const QueryAst& ast, const std::vector<Triple>& triples, std::size_t depth,
                 std::map<std::string, Term>& binding,
                 std::set<std::vector<Term>>& out) {
    if (depth == ast.patterns.size()) {
        for (const auto& f : ast.filters) {
            auto it = binding.find(f.variable);
            Term want{f.value.kind == PatternTerm::Kind::Iri ? Term::Kind::Iri
                                                             : Term::Kind::Literal,
                      f.value.text};
            if (it == binding.end() || !(it->second == want)) return;
        }
        std::vector<Term> row;
        for (const auto& v : ast.select_vars) row.push_back(binding.at(v));
        out.insert(std::move(row));
        return;
    }
    const TriplePattern& p = ast.patterns[depth];
    for (const Triple& t : triples) {
        // positions are matched left to right so a variable repeated
        // inside one pattern must take a single value
        auto saved = binding;
        bool ok = matches(p.subject, t.subject, binding);
        if (ok) {
            bind(p.subject, t.subject, binding);
            ok = matches(p.predicate, t.predicate, binding);
        }
        if (ok) {
            bind(p.predicate, t.predicate, binding);
            ok = matches(p.object, t.object, binding);
        }
        if (ok) {
            bind(p.object, t.object, binding);
            oracle_join(ast, triples, depth + 1, binding, out);
        }
        binding = saved;
    }
}

ResultTable oracle_execute(const QueryAst& ast, const std::vector<Triple>& triples) {
    std::map<std::string, Term> binding;
    std::set<std::vector<Term>> rows;
    oracle_join(ast, triples, 0, binding, rows);
    ResultTable t;
    t.columns = ast.select_vars;
    t.rows.assign(rows.begin(), rows.end());
    return t;
}

}  // namespace

TEST_CASE("bundled elevator-floor query parses to the expected shape") {
    auto text = slurp(data_path("listing1.rq"));
    auto ast = query::parse_query(text);
    CHECK(ast.select_vars == std::vector<std::string>{"level", "space", "ele", "ucode"});
    CHECK(ast.patterns.size() == 6);
    REQUIRE(ast.filters.size() == 1);
    CHECK(ast.filters[0].variable == "level");
    CHECK(ast.filters[0].value.kind == PatternTerm::Kind::Iri);
    CHECK(ast.filters[0].value.text == triples::Namespaces{}.instance("Level1"));

    // a literal object pattern survives expansion
    bool saw_light = false;
    for (const auto& p : ast.patterns)
        if (p.object.kind == PatternTerm::Kind::Literal && p.object.text == "Light")
            saw_light = true;
    CHECK(saw_light);
}

TEST_CASE("bundled query returns the Level1 lights, matching the oracle") {
    auto g = topology::load_topology_file(data_path("sample_building.json"));
    auto ast = query::parse_query(slurp(data_path("listing1.rq")));
    auto got = query::execute(ast, g);
    auto want = oracle_execute(ast, triples::as_triples(g));
    CHECK(got == want);

    REQUIRE(got.rows.size() == 2);
    // last column is the plain ucode literal
    CHECK(got.rows[0].back() == triples::literal("A101_light"));
    CHECK(got.rows[1].back() == triples::literal("A102_light"));

    auto csv = query::to_csv(got);
    CHECK(csv.find("level,space,ele,ucode") == 0);
    CHECK(csv.find("daiwa_bot:A101_light") != std::string::npos);
}

TEST_CASE("prefix declarations, comments and the a-shorthand") {
    auto ast = query::parse_query(
        "PREFIX ex: <http://x.example/>\n"
        "# lights only\n"
        "SELECT ?s WHERE { ?s a ex:Lamp . ?s ex:state \"on\" }");
    REQUIRE(ast.patterns.size() == 2);
    CHECK(ast.patterns[0].predicate.kind == PatternTerm::Kind::Iri);
    CHECK(ast.patterns[0].predicate.text == triples::Namespaces::rdf_type());
    CHECK(ast.patterns[0].object.text == "http://x.example/Lamp");
    CHECK(ast.patterns[1].object.kind == PatternTerm::Kind::Literal);

    // redeclaring a default prefix overrides it
    auto ast2 = query::parse_query(
        "PREFIX bot: <http://other.example/>\nSELECT ?s WHERE { ?s bot:p ?o }");
    CHECK(ast2.patterns[0].predicate.text == "http://other.example/p");

    // IRIREF works without any prefix
    auto ast3 = query::parse_query("SELECT ?s WHERE { ?s <http://p.example/q> ?o }");
    CHECK(ast3.patterns[0].predicate.text == "http://p.example/q");
}

TEST_CASE("nested group braces flatten") {
    auto flat = query::parse_query("SELECT ?s WHERE { ?s a ?t }");
    auto nested = query::parse_query("SELECT ?s WHERE { { { ?s a ?t } } }");
    CHECK(flat.patterns == nested.patterns);

    // deep nesting has a hard depth limit
    std::string deep = "SELECT ?s WHERE ";
    for (int i = 0; i < 100; ++i) deep += "{ ";
    deep += "?s a ?t ";
    for (int i = 0; i < 100; ++i) deep += "} ";
    CHECK_THROWS_AS(query::parse_query(deep), query::SyntaxError);
}

TEST_CASE("syntax errors carry positions and expectations") {
    try {
        query::parse_query("SELECT ?s WHERE { ?s ?p }");
        FAIL("expected SyntaxError");
    } catch (const query::SyntaxError& e) {
        CHECK(e.line() == 1);
        CHECK(e.column() > 20);
        CHECK(!e.expected().empty());
    }

    try {
        query::parse_query("SELECT ?s\nWHERE { ?s a\n!! }");
        FAIL("expected SyntaxError");
    } catch (const query::SyntaxError& e) {
        CHECK(e.line() == 3);
    }

    CHECK_THROWS_AS(query::parse_query(""), query::SyntaxError);
    CHECK_THROWS_AS(query::parse_query("SELECT WHERE { ?s a ?t }"), query::SyntaxError);
    CHECK_THROWS_AS(query::parse_query("SELECT ?s { ?s a ?t }"), query::SyntaxError);
    CHECK_THROWS_AS(query::parse_query("SELECT ?s WHERE { ?s a ?t"), query::SyntaxError);
    // 'a' is only sugar in predicate position
    CHECK_THROWS_AS(query::parse_query("SELECT ?s WHERE { a ?p ?s }"), query::SyntaxError);
    // literals cannot be subjects or predicates
    CHECK_THROWS_AS(query::parse_query("SELECT ?s WHERE { \"x\" a ?s }"), query::SyntaxError);
    // FILTER needs a parenthesised equality
    CHECK_THROWS_AS(query::parse_query("SELECT ?s WHERE { ?s a ?t . FILTER ?s = ?t }"),
                    query::SyntaxError);
    // undeclared prefix
    CHECK_THROWS_AS(query::parse_query("SELECT ?s WHERE { ?s nope:p ?o }"),
                    query::UnknownPrefixError);
    // select var that never occurs in a pattern
    CHECK_THROWS_AS(query::parse_query("SELECT ?zz WHERE { ?s a ?t }"), query::SyntaxError);
    // filter var that never occurs in a pattern
    CHECK_THROWS_AS(
        query::parse_query("SELECT ?s WHERE { ?s a ?t . FILTER(?zz = \"x\") }"),
        query::SyntaxError);
    // empty group
    CHECK_THROWS_AS(query::parse_query("SELECT ?s WHERE { }"), query::SyntaxError);
}

TEST_CASE("execution joins with binding propagation") {
    std::vector<Triple> ts = {
        {triples::iri("u:r1"), triples::iri("u:holds"), triples::iri("u:e1")},
        {triples::iri("u:r1"), triples::iri("u:holds"), triples::iri("u:e2")},
        {triples::iri("u:r2"), triples::iri("u:holds"), triples::iri("u:e3")},
        {triples::iri("u:e1"), triples::iri("u:type"), triples::literal("Light")},
        {triples::iri("u:e3"), triples::iri("u:type"), triples::literal("Light")},
        // duplicate triple must not duplicate rows
        {triples::iri("u:e3"), triples::iri("u:type"), triples::literal("Light")},
    };
    QueryAst ast;
    ast.select_vars = {"r", "e"};
    ast.patterns = {
        {{PatternTerm::Kind::Variable, "r"}, {PatternTerm::Kind::Iri, "u:holds"},
         {PatternTerm::Kind::Variable, "e"}},
        {{PatternTerm::Kind::Variable, "e"}, {PatternTerm::Kind::Iri, "u:type"},
         {PatternTerm::Kind::Literal, "Light"}},
    };
    auto got = query::execute(ast, ts);
    REQUIRE(got.rows.size() == 2);
    CHECK(got.rows[0] == std::vector<Term>{triples::iri("u:r1"), triples::iri("u:e1")});
    CHECK(got.rows[1] == std::vector<Term>{triples::iri("u:r2"), triples::iri("u:e3")});
    CHECK(got == oracle_execute(ast, ts));

    // a shared variable can bridge subject and object positions
    QueryAst same;
    same.select_vars = {"x"};
    same.patterns = {
        {{PatternTerm::Kind::Variable, "x"}, {PatternTerm::Kind::Iri, "u:type"},
         {PatternTerm::Kind::Literal, "Light"}},
        {{PatternTerm::Kind::Variable, "r"}, {PatternTerm::Kind::Iri, "u:holds"},
         {PatternTerm::Kind::Variable, "x"}},
    };
    auto got2 = query::execute(same, ts);
    CHECK(got2 == oracle_execute(same, ts));
    CHECK(got2.rows.size() == 2);
}

TEST_CASE("executor equals oracle and is pattern-order invariant") {
    Rand rng(555);
    auto mk_term = [&](bool allow_literal) {
        int kind = static_cast<int>(rng.below(allow_literal ? 3 : 2));
        std::string pool[] = {"n0", "n1", "n2", "n3", "n4", "n5"};
        std::string t = pool[rng.below(6)];
        if (kind == 2) return triples::literal(t);
        return triples::iri("u:" + t);
    };
    int checked = 0;
    for (int iter = 0; iter < 500; ++iter) {
        // random graph
        std::vector<Triple> ts;
        int nt = 3 + static_cast<int>(rng.below(18));
        for (int i = 0; i < nt; ++i)
            ts.push_back({mk_term(false), mk_term(false), mk_term(true)});

        // random query over variables a..d
        QueryAst ast;
        std::string vars[] = {"a", "b", "c", "d"};
        int np = 1 + static_cast<int>(rng.below(4));
        std::set<std::string> used;
        auto mk_pterm = [&](bool allow_literal) -> PatternTerm {
            if (rng.below(2)) {
                std::string v = vars[rng.below(4)];
                used.insert(v);
                return {PatternTerm::Kind::Variable, v};
            }
            Term t = mk_term(allow_literal);
            return {t.kind == Term::Kind::Iri ? PatternTerm::Kind::Iri
                                              : PatternTerm::Kind::Literal,
                    t.text};
        };
        for (int i = 0; i < np; ++i)
            ast.patterns.push_back({mk_pterm(false), mk_pterm(false), mk_pterm(true)});
        if (used.empty()) continue;
        ast.select_vars.assign(used.begin(), used.end());
        if (rng.below(3) == 0) {
            std::string v = *used.begin();
            Term t = mk_term(true);
            ast.filters.push_back(
                {v,
                 {t.kind == Term::Kind::Iri ? PatternTerm::Kind::Iri : PatternTerm::Kind::Literal,
                  t.text}});
        }

        auto want = oracle_execute(ast, ts);
        CHECK(query::execute(ast, ts) == want);

        // pattern order must not matter
        QueryAst shuffled = ast;
        for (std::size_t i = shuffled.patterns.size(); i > 1; --i)
            std::swap(shuffled.patterns[i - 1], shuffled.patterns[rng.below(i)]);
        CHECK(query::execute(shuffled, ts) == want);
        ++checked;
    }
    CHECK(checked > 400);
}

TEST_CASE("parser is total on arbitrary bytes") {
    Rand rng(808);
    const std::string alphabet =
        "SELECT WHERE FILTER PREFIX ?xy{}().=<>\"#:ab_-\n\t\\\x01\x7f\xc3\xa9 ";
    int parsed_ok = 0;
    for (int iter = 0; iter < 30000; ++iter) {
        std::string s;
        int len = static_cast<int>(rng.below(120));
        for (int i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
        try {
            auto ast = query::parse_query(s);
            ++parsed_ok;
        } catch (const ParseError&) {
            // SyntaxError / UnknownPrefixError are the only accepted outcomes
        }
    }
    // almost everything is rejected; the point is that nothing escapes
    CHECK(parsed_ok >= 0);

    // mutations of a known-good query
    std::string base = slurp(data_path("listing1.rq"));
    for (int iter = 0; iter < 20000; ++iter) {
        std::string s = base;
        int edits = 1 + static_cast<int>(rng.below(4));
        for (int e = 0; e < edits; ++e) {
            std::size_t pos = rng.below(s.size());
            switch (rng.below(3)) {
                case 0: s[pos] = static_cast<char>(rng.below(256)); break;
                case 1: s.erase(pos, rng.below(8) + 1); break;
                default: s.insert(pos, 1, static_cast<char>(rng.below(256))); break;
            }
            if (s.empty()) s = "x";
        }
        try {
            query::parse_query(s);
        } catch (const ParseError&) {
        }
    }
}
