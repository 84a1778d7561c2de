#pragma once

// SPARQL-subset parser and executor: SELECT over basic graph patterns
// with equality FILTERs, enough to run the kind of element-lookup
// queries the topology view is built for. Parsing is total — any byte
// sequence yields either an AST or a positioned SyntaxError. The
// executor is a plain left-to-right pattern join with binding
// propagation; results are deduplicated and sorted, so output is
// deterministic. Grammar: docs/query-grammar.md.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sbk/triples.hpp"

namespace sbk::query {

class SyntaxError : public ParseError {
public:
    SyntaxError(const std::string& msg, int line, int col, std::string expected = {})
        : ParseError(msg + (expected.empty() ? "" : "; expected " + expected), line, col),
          expected_(std::move(expected)) {}

    const std::string& expected() const { return expected_; }

private:
    std::string expected_;
};

class UnknownPrefixError : public ParseError {
public:
    UnknownPrefixError(const std::string& prefix, int line, int col)
        : ParseError("unknown prefix '" + prefix + ":'", line, col), prefix_(prefix) {}

    const std::string& prefix() const { return prefix_; }

private:
    std::string prefix_;
};

struct PatternTerm {
    enum class Kind { Variable, Iri, Literal };
    Kind kind = Kind::Variable;
    std::string text;  // variable name (no '?'), expanded IRI, or literal

    auto operator<=>(const PatternTerm&) const = default;
};

struct TriplePattern {
    PatternTerm subject, predicate, object;
    auto operator<=>(const TriplePattern&) const = default;
};

struct EqualityFilter {
    std::string variable;
    PatternTerm value;  // Iri or Literal
    auto operator<=>(const EqualityFilter&) const = default;
};

struct QueryAst {
    std::vector<std::string> select_vars;
    std::vector<TriplePattern> patterns;
    std::vector<EqualityFilter> filters;
    std::map<std::string, std::string> prefixes;  // short prefix -> namespace
};

// Prefixes declared in the query (PREFIX p: <ns>) extend the defaults:
// bot:, rdf:, and the instance prefix from `ns`.
QueryAst parse_query(std::string_view text, const triples::Namespaces& ns = {});

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<triples::Term>> rows;  // deduplicated, sorted

    bool operator==(const ResultTable&) const = default;
};

ResultTable execute(const QueryAst& ast, const std::vector<triples::Triple>& triples);
ResultTable execute(const QueryAst& ast, const topology::TopologyGraph& g,
                    const triples::Namespaces& ns = {});

// Header row = select vars; IRIs compacted to prefix:local form.
std::string to_csv(const ResultTable& table, const triples::Namespaces& ns = {});

}  // namespace sbk::query
