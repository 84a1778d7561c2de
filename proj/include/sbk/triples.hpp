#pragma once

// RDF-style triple view of the topology. Entities become subjects under
// the instance namespace; their attributes (kind, ucode, name,
// element_type, floor_value) and the spatial relations each emit one
// triple. The stream is lossless: graph_from_triples(as_triples(g)) == g.

#include <string>
#include <vector>

#include "sbk/topology.hpp"

namespace sbk::triples {

struct Term {
    enum class Kind { Iri, Literal };
    Kind kind = Kind::Iri;
    std::string text;  // full IRI, or literal value

    auto operator<=>(const Term&) const = default;
};

inline Term iri(std::string text) { return {Term::Kind::Iri, std::move(text)}; }
inline Term literal(std::string text) { return {Term::Kind::Literal, std::move(text)}; }

struct Triple {
    Term subject, predicate, object;
    auto operator<=>(const Triple&) const = default;
};

// Prefix bindings shared by the triple view and the query engine. The
// instance prefix is configurable; bot/rdf are fixed vocabulary.
struct Namespaces {
    std::string instance_prefix = "daiwa_bot";
    std::string instance_ns = "https://daiwa.example/bot#";

    static const std::string& bot_ns();
    static const std::string& rdf_ns();

    std::string instance(const std::string& local) const { return instance_ns + local; }
    static std::string bot(const std::string& local) { return bot_ns() + local; }
    static std::string rdf_type() { return rdf_ns() + "type"; }

    // Compact an IRI back to prefix:local where a binding matches.
    std::string compact(const Term& t) const;
};

std::vector<Triple> as_triples(const topology::TopologyGraph& g, const Namespaces& ns = {});

// Re-assemble a graph from a triple stream produced by as_triples.
// Runs the same validation as load_topology.
topology::TopologyGraph graph_from_triples(const std::vector<Triple>& triples,
                                           const Namespaces& ns = {});

}  // namespace sbk::triples
