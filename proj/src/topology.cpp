#include "sbk/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sbk::topology {

namespace {

struct KindName {
    EntityKind kind;
    const char* name;
};
constexpr KindName kKindNames[] = {
    {EntityKind::Site, "Site"},     {EntityKind::Building, "Building"},
    {EntityKind::Storey, "Storey"}, {EntityKind::Space, "Space"},
    {EntityKind::Element, "Element"}, {EntityKind::Zone, "Zone"},
};

struct PredName {
    Predicate pred;
    const char* name;
};
constexpr PredName kPredNames[] = {
    {Predicate::HasBuilding, "hasBuilding"},   {Predicate::HasStorey, "hasStorey"},
    {Predicate::HasSpace, "hasSpace"},         {Predicate::HasElement, "hasElement"},
    {Predicate::AdjacentZone, "adjacentZone"}, {Predicate::IntersectsZone, "intersectsZone"},
};

}  // namespace

const char* to_string(EntityKind k) {
    for (const auto& e : kKindNames)
        if (e.kind == k) return e.name;
    return "?";
}

const char* to_string(Predicate p) {
    for (const auto& e : kPredNames)
        if (e.pred == p) return e.name;
    return "?";
}

std::optional<EntityKind> entity_kind_from(const std::string& s) {
    for (const auto& e : kKindNames)
        if (s == e.name) return e.kind;
    return std::nullopt;
}

std::optional<Predicate> predicate_from(const std::string& s) {
    for (const auto& e : kPredNames)
        if (s == e.name) return e.pred;
    return std::nullopt;
}

namespace {

void check_entity(const Entity& e) {
    if (e.id.empty()) throw TypeViolationError("entity with empty ucode");
    const bool typed = e.kind == EntityKind::Element || e.kind == EntityKind::Zone;
    if (e.element_type.has_value() != typed) {
        throw TypeViolationError("entity '" + e.id + "': element_type is " +
                                 (typed ? "required for " : "not allowed for ") +
                                 to_string(e.kind));
    }
    const bool storey = e.kind == EntityKind::Storey;
    if (e.floor_value.has_value() != storey) {
        throw TypeViolationError("entity '" + e.id + "': floor_value is " +
                                 (storey ? "required for " : "not allowed for ") +
                                 to_string(e.kind));
    }
    if (e.floor_value && *e.floor_value == 0) {
        throw TypeViolationError("entity '" + e.id + "': floor_value 0 is excluded");
    }
}

void check_relation_types(const Relation& r, const Entity& s, const Entity& o) {
    auto expect = [&](EntityKind sk, EntityKind ok) {
        if (s.kind != sk || o.kind != ok) {
            throw TypeViolationError(std::string("relation ") + s.id + " " +
                                     to_string(r.predicate) + " " + o.id + ": expected " +
                                     to_string(sk) + " -> " + to_string(ok) + ", got " +
                                     to_string(s.kind) + " -> " + to_string(o.kind));
        }
    };
    switch (r.predicate) {
        case Predicate::HasBuilding: expect(EntityKind::Site, EntityKind::Building); break;
        case Predicate::HasStorey: expect(EntityKind::Building, EntityKind::Storey); break;
        case Predicate::HasSpace: expect(EntityKind::Storey, EntityKind::Space); break;
        case Predicate::HasElement: expect(EntityKind::Space, EntityKind::Element); break;
        case Predicate::AdjacentZone: expect(EntityKind::Space, EntityKind::Space); break;
        case Predicate::IntersectsZone:
            if (!((s.kind == EntityKind::Zone && o.kind == EntityKind::Storey) ||
                  (s.kind == EntityKind::Storey && o.kind == EntityKind::Zone))) {
                throw TypeViolationError("relation " + s.id + " intersectsZone " + o.id +
                                         ": endpoints must be a Zone and a Storey");
            }
            break;
    }
}

}  // namespace

TopologyGraph TopologyGraph::build(std::vector<Entity> entities, std::vector<Relation> relations) {
    TopologyGraph g;
    for (auto& e : entities) {
        check_entity(e);
        auto [it, inserted] = g.entities_.emplace(e.id, std::move(e));
        if (!inserted) throw TypeViolationError("duplicate ucode: " + it->first);
    }

    std::set<std::pair<Ucode, Ucode>> adjacency_seen;
    for (auto& r : relations) {
        auto si = g.entities_.find(r.subject);
        if (si == g.entities_.end()) throw DanglingReferenceError(r.subject);
        auto oi = g.entities_.find(r.object);
        if (oi == g.entities_.end()) throw DanglingReferenceError(r.object);
        check_relation_types(r, si->second, oi->second);

        switch (r.predicate) {
            case Predicate::AdjacentZone: {
                if (r.subject == r.object)
                    throw TypeViolationError("adjacentZone loop on " + r.subject);
                auto key = std::minmax(r.subject, r.object);
                if (!adjacency_seen.insert({key.first, key.second}).second) continue;
                g.adjacency_[r.subject].push_back(r.object);
                g.adjacency_[r.object].push_back(r.subject);
                break;
            }
            case Predicate::HasSpace: {
                auto [it, inserted] = g.space_parent_.emplace(r.object, r.subject);
                if (!inserted && it->second != r.subject)
                    throw TypeViolationError("space '" + r.object + "' has two parent storeys");
                break;
            }
            case Predicate::HasElement: {
                auto [it, inserted] = g.element_parent_.emplace(r.object, r.subject);
                if (!inserted && it->second != r.subject)
                    throw TypeViolationError("element '" + r.object + "' is in two spaces");
                g.space_elements_[r.subject].push_back(r.object);
                break;
            }
            case Predicate::IntersectsZone: {
                const bool zone_first = si->second.kind == EntityKind::Zone;
                g.zone_storeys_[zone_first ? r.subject : r.object].push_back(
                    zone_first ? r.object : r.subject);
                break;
            }
            default: break;
        }
        g.relations_.push_back(std::move(r));
    }

    for (auto& [id, list] : g.adjacency_) {
        std::sort(list.begin(), list.end());
    }
    for (auto& [id, list] : g.space_elements_) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    for (auto& [id, list] : g.zone_storeys_) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    for (const auto& [id, e] : g.entities_) {
        if (e.kind == EntityKind::Storey && e.floor_value) {
            auto [it, inserted] = g.floor_index_.emplace(*e.floor_value, id);
            if (!inserted)
                throw TypeViolationError("two storeys share floor value " +
                                         std::to_string(*e.floor_value));
        }
    }
    return g;
}

const Entity* TopologyGraph::find(const Ucode& id) const {
    auto it = entities_.find(id);
    return it == entities_.end() ? nullptr : &it->second;
}

const Entity& TopologyGraph::at(const Ucode& id) const {
    const Entity* e = find(id);
    if (!e) throw UnknownEntityError(id);
    return *e;
}

std::vector<const Entity*> TopologyGraph::entities_of_kind(EntityKind k) const {
    std::vector<const Entity*> out;
    for (const auto& [id, e] : entities_)
        if (e.kind == k) out.push_back(&e);
    return out;
}

std::optional<int> TopologyGraph::hops(const Ucode& a, const Ucode& b) const {
    const Entity& ea = at(a);
    const Entity& eb = at(b);
    if (ea.kind != EntityKind::Space || eb.kind != EntityKind::Space)
        throw TypeViolationError("hops endpoints must be spaces: " + a + ", " + b);
    if (a == b) return 0;

    std::map<Ucode, int> dist{{a, 0}};
    std::deque<Ucode> frontier{a};
    while (!frontier.empty()) {
        Ucode cur = frontier.front();
        frontier.pop_front();
        int d = dist[cur];
        auto it = adjacency_.find(cur);
        if (it == adjacency_.end()) continue;
        for (const Ucode& next : it->second) {
            if (dist.count(next)) continue;
            if (next == b) return d + 1;
            dist[next] = d + 1;
            frontier.push_back(next);
        }
    }
    return std::nullopt;
}

int TopologyGraph::floor_value_of(const Ucode& space) const {
    const Entity* storey = parent_storey(space);
    if (!storey) throw TopologyResolutionError("space '" + space + "' has no parent storey");
    if (!storey->floor_value)
        throw TopologyResolutionError("storey '" + storey->id + "' has no floor value");
    return *storey->floor_value;
}

std::vector<const Entity*> TopologyGraph::elements_in_space(
    const Ucode& space, const std::optional<std::string>& type_filter) const {
    const Entity& s = at(space);
    if (s.kind != EntityKind::Space)
        throw TypeViolationError("'" + space + "' is not a space");
    std::vector<const Entity*> out;
    auto it = space_elements_.find(space);
    if (it == space_elements_.end()) return out;
    for (const Ucode& id : it->second) {
        const Entity& e = at(id);
        if (type_filter && e.element_type != *type_filter) continue;
        out.push_back(&e);
    }
    return out;  // space_elements_ lists are ucode-sorted
}

std::vector<const Entity*> TopologyGraph::storeys_served_by(const Ucode& zone) const {
    const Entity& z = at(zone);
    if (z.kind != EntityKind::Zone)
        throw TypeViolationError("'" + zone + "' is not a zone");
    std::vector<const Entity*> out;
    auto it = zone_storeys_.find(zone);
    if (it == zone_storeys_.end()) return out;
    for (const Ucode& id : it->second) out.push_back(&at(id));
    std::sort(out.begin(), out.end(), [](const Entity* a, const Entity* b) {
        return a->floor_value.value_or(0) < b->floor_value.value_or(0);
    });
    return out;
}

const Entity* TopologyGraph::parent_storey(const Ucode& space) const {
    const Entity& s = at(space);
    if (s.kind != EntityKind::Space)
        throw TypeViolationError("'" + space + "' is not a space");
    auto it = space_parent_.find(space);
    return it == space_parent_.end() ? nullptr : &at(it->second);
}

const Entity* TopologyGraph::containing_space(const Ucode& element) const {
    at(element);
    auto it = element_parent_.find(element);
    return it == element_parent_.end() ? nullptr : &at(it->second);
}

const Entity* TopologyGraph::storey_on_floor(int floor) const {
    auto it = floor_index_.find(floor);
    return it == floor_index_.end() ? nullptr : &at(it->second);
}

std::optional<Ucode> TopologyGraph::elevator_hall_on(int floor) const {
    const Entity* storey = storey_on_floor(floor);
    if (!storey) return std::nullopt;
    for (const auto& [space, parent] : space_parent_) {
        if (parent != storey->id) continue;
        auto elems = elements_in_space(space, std::string("Elevator"));
        if (!elems.empty()) return space;
    }
    return std::nullopt;
}

const std::vector<Ucode>& TopologyGraph::neighbours(const Ucode& space) const {
    static const std::vector<Ucode> kEmpty;
    at(space);
    auto it = adjacency_.find(space);
    return it == adjacency_.end() ? kEmpty : it->second;
}

bool TopologyGraph::operator==(const TopologyGraph& other) const {
    if (entities_ != other.entities_) return false;
    auto canon = [](const std::vector<Relation>& rels) {
        std::vector<Relation> out = rels;
        for (auto& r : out) {
            if (r.predicate == Predicate::AdjacentZone && r.object < r.subject)
                std::swap(r.subject, r.object);
        }
        std::sort(out.begin(), out.end());
        return out;
    };
    return canon(relations_) == canon(other.relations_);
}

namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& where, const std::string& what) {
    throw ParseError("topology " + where + ": " + what, 1);
}

void reject_unknown_fields(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) field_error(where, "unknown field '" + it.key() + "'");
    }
}

}  // namespace

TopologyGraph load_topology(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("topology document is not valid JSON: ") + e.what(), 1);
    }
    if (!doc.is_object()) field_error("document", "top level must be an object");
    reject_unknown_fields(doc, {"entities", "relations"}, "document");
    if (!doc.contains("entities") || !doc["entities"].is_array())
        field_error("document", "'entities' array is required");
    if (!doc.contains("relations") || !doc["relations"].is_array())
        field_error("document", "'relations' array is required");

    std::vector<Entity> entities;
    for (const auto& e : doc["entities"]) {
        if (!e.is_object()) field_error("entities", "entry must be an object");
        reject_unknown_fields(e, {"ucode", "kind", "name", "element_type", "floor_value"},
                              "entity");
        Entity ent;
        if (!e.contains("ucode") || !e["ucode"].is_string())
            field_error("entity", "'ucode' string is required");
        ent.id = e["ucode"].get<std::string>();
        if (!e.contains("kind") || !e["kind"].is_string())
            field_error("entity '" + ent.id + "'", "'kind' string is required");
        auto kind = entity_kind_from(e["kind"].get<std::string>());
        if (!kind)
            field_error("entity '" + ent.id + "'",
                        "unknown kind '" + e["kind"].get<std::string>() + "'");
        ent.kind = *kind;
        if (e.contains("name")) {
            if (!e["name"].is_string()) field_error("entity '" + ent.id + "'", "'name' must be a string");
            ent.name = e["name"].get<std::string>();
        }
        if (e.contains("element_type")) {
            if (!e["element_type"].is_string())
                field_error("entity '" + ent.id + "'", "'element_type' must be a string");
            ent.element_type = e["element_type"].get<std::string>();
        }
        if (e.contains("floor_value")) {
            if (!e["floor_value"].is_number_integer())
                field_error("entity '" + ent.id + "'", "'floor_value' must be an integer");
            ent.floor_value = e["floor_value"].get<int>();
        }
        entities.push_back(std::move(ent));
    }

    std::vector<Relation> relations;
    for (const auto& r : doc["relations"]) {
        if (!r.is_object()) field_error("relations", "entry must be an object");
        reject_unknown_fields(r, {"s", "p", "o"}, "relation");
        for (const char* k : {"s", "p", "o"}) {
            if (!r.contains(k) || !r[k].is_string())
                field_error("relation", std::string("'") + k + "' string is required");
        }
        Relation rel;
        rel.subject = r["s"].get<std::string>();
        rel.object = r["o"].get<std::string>();
        auto pred = predicate_from(r["p"].get<std::string>());
        if (!pred) field_error("relation", "unknown predicate '" + r["p"].get<std::string>() + "'");
        rel.predicate = *pred;
        relations.push_back(std::move(rel));
    }

    return TopologyGraph::build(std::move(entities), std::move(relations));
}

TopologyGraph load_topology_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open topology file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_topology(buf.str());
}

}  // namespace sbk::topology
