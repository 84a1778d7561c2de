#include "sbk/triples.hpp"

#include <map>

namespace sbk::triples {

using topology::Entity;
using topology::EntityKind;
using topology::Predicate;
using topology::Relation;
using topology::TopologyGraph;
using topology::Ucode;

const std::string& Namespaces::bot_ns() {
    static const std::string ns = "https://w3id.org/bot#";
    return ns;
}

const std::string& Namespaces::rdf_ns() {
    static const std::string ns = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    return ns;
}

std::string Namespaces::compact(const Term& t) const {
    if (t.kind == Term::Kind::Literal) return t.text;
    if (t.text.starts_with(instance_ns)) return instance_prefix + ":" + t.text.substr(instance_ns.size());
    if (t.text.starts_with(bot_ns())) return "bot:" + t.text.substr(bot_ns().size());
    if (t.text.starts_with(rdf_ns())) return "rdf:" + t.text.substr(rdf_ns().size());
    return t.text;
}

std::vector<Triple> as_triples(const TopologyGraph& g, const Namespaces& ns) {
    std::vector<Triple> out;
    const Term type_pred = iri(Namespaces::rdf_type());
    for (const auto& [id, e] : g.entities()) {
        Term node = iri(ns.instance(id));
        out.push_back({node, type_pred, iri(Namespaces::bot(topology::to_string(e.kind)))});
        out.push_back({node, iri(ns.instance("ucode")), literal(id)});
        out.push_back({node, iri(ns.instance("name")), literal(e.name)});
        if (e.element_type)
            out.push_back({node, iri(ns.instance("element_type")), literal(*e.element_type)});
        if (e.floor_value)
            out.push_back({node, iri(ns.instance("floor_value")),
                           literal(std::to_string(*e.floor_value))});
    }
    for (const Relation& r : g.relations()) {
        out.push_back({iri(ns.instance(r.subject)),
                       iri(Namespaces::bot(topology::to_string(r.predicate))),
                       iri(ns.instance(r.object))});
    }
    return out;
}

topology::TopologyGraph graph_from_triples(const std::vector<Triple>& triples,
                                           const Namespaces& ns) {
    auto local = [&](const Term& t, const std::string& space) -> std::string {
        if (t.kind != Term::Kind::Iri || !t.text.starts_with(space))
            throw TypeViolationError("triple term outside expected namespace: " + t.text);
        return t.text.substr(space.size());
    };

    std::map<Ucode, Entity> entities;
    std::vector<Relation> relations;
    auto entity_of = [&](const Ucode& id) -> Entity& {
        auto [it, inserted] = entities.try_emplace(id);
        if (inserted) it->second.id = id;
        return it->second;
    };

    for (const Triple& t : triples) {
        Ucode subject = local(t.subject, ns.instance_ns);
        if (t.predicate.kind != Term::Kind::Iri)
            throw TypeViolationError("triple predicate must be an IRI");
        const std::string& p = t.predicate.text;

        if (p == Namespaces::rdf_type()) {
            auto kind = topology::entity_kind_from(local(t.object, Namespaces::bot_ns()));
            if (!kind) throw TypeViolationError("unknown entity class: " + t.object.text);
            entity_of(subject).kind = *kind;
        } else if (p == ns.instance("ucode")) {
            if (t.object.text != subject)
                throw TypeViolationError("ucode literal disagrees with subject: " + t.object.text);
        } else if (p == ns.instance("name")) {
            entity_of(subject).name = t.object.text;
        } else if (p == ns.instance("element_type")) {
            entity_of(subject).element_type = t.object.text;
        } else if (p == ns.instance("floor_value")) {
            entity_of(subject).floor_value = std::stoi(t.object.text);
        } else if (p.starts_with(Namespaces::bot_ns())) {
            auto pred = topology::predicate_from(p.substr(Namespaces::bot_ns().size()));
            if (!pred) throw TypeViolationError("unknown relation predicate: " + p);
            relations.push_back({subject, *pred, local(t.object, ns.instance_ns)});
        } else {
            throw TypeViolationError("unrecognised predicate: " + p);
        }
    }

    std::vector<Entity> list;
    list.reserve(entities.size());
    for (auto& [id, e] : entities) list.push_back(std::move(e));
    return TopologyGraph::build(std::move(list), std::move(relations));
}

}  // namespace sbk::triples
