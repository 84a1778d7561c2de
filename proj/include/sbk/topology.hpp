#pragma once

// Typed building graph: the BOT class hierarchy (Site/Building/Storey/
// Space/Element plus elevator Zones) with spatial relations. Immutable
// after load; every operation is a const read, so concurrent readers are
// fine. Hop distance over adjacentZone edges and storey floor values are
// the two regression features the calibration layer consumes.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbk/errors.hpp"

namespace sbk::topology {

using Ucode = std::string;

enum class EntityKind { Site, Building, Storey, Space, Element, Zone };

enum class Predicate {
    HasBuilding,    // Site -> Building
    HasStorey,      // Building -> Storey
    HasSpace,       // Storey -> Space
    HasElement,     // Space -> Element
    AdjacentZone,   // Space <-> Space, undirected, stored once
    IntersectsZone  // Zone <-> Storey (either orientation accepted)
};

const char* to_string(EntityKind k);
const char* to_string(Predicate p);
std::optional<EntityKind> entity_kind_from(const std::string& s);
std::optional<Predicate> predicate_from(const std::string& s);

struct Entity {
    Ucode id;
    EntityKind kind = EntityKind::Space;
    std::string name;
    std::optional<std::string> element_type;  // Element / Zone only
    std::optional<int> floor_value;           // Storey only, never 0

    bool operator==(const Entity&) const = default;
};

struct Relation {
    Ucode subject;
    Predicate predicate = Predicate::HasSpace;
    Ucode object;

    auto operator<=>(const Relation&) const = default;
};

class TopologyGraph {
public:
    TopologyGraph() = default;

    // Validated construction from already-parsed parts. Throws
    // DanglingReferenceError / TypeViolationError on any invariant
    // breach; adjacentZone duplicates (either orientation) are
    // collapsed.
    static TopologyGraph build(std::vector<Entity> entities, std::vector<Relation> relations);

    const Entity* find(const Ucode& id) const;
    const Entity& at(const Ucode& id) const;  // throws UnknownEntityError

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t relation_count() const { return relations_.size(); }
    const std::vector<Relation>& relations() const { return relations_; }
    const std::map<Ucode, Entity>& entities() const { return entities_; }

    std::vector<const Entity*> entities_of_kind(EntityKind k) const;

    // Shortest path length over undirected adjacentZone edges.
    // nullopt means unreachable. Throws if either ucode is not a Space.
    std::optional<int> hops(const Ucode& a, const Ucode& b) const;

    // Floor value of the space's parent storey. Throws UnknownEntityError /
    // TopologyResolutionError when the chain is broken.
    int floor_value_of(const Ucode& space) const;

    // Elements related via hasElement, optionally filtered by
    // element_type. Ucode-sorted, so output order is stable.
    std::vector<const Entity*> elements_in_space(
        const Ucode& space, const std::optional<std::string>& type_filter = std::nullopt) const;

    // Storeys connected to the zone via intersectsZone, in floor order.
    std::vector<const Entity*> storeys_served_by(const Ucode& zone) const;

    // nullptr when the space has no hasSpace parent.
    const Entity* parent_storey(const Ucode& space) const;

    // nullptr when the element has no hasElement parent.
    const Entity* containing_space(const Ucode& element) const;

    // The storey with the given floor value, if any.
    const Entity* storey_on_floor(int floor) const;

    // Convention: a storey's elevator hall is the space on that storey
    // holding an Element whose element_type is "Elevator" (the landing
    // panel). nullopt when the floor has no such space.
    std::optional<Ucode> elevator_hall_on(int floor) const;

    // adjacentZone neighbours of a space (Ucode-sorted).
    const std::vector<Ucode>& neighbours(const Ucode& space) const;

    bool operator==(const TopologyGraph& other) const;

private:
    std::map<Ucode, Entity> entities_;
    std::vector<Relation> relations_;
    std::map<Ucode, std::vector<Ucode>> adjacency_;       // space -> spaces
    std::map<Ucode, Ucode> space_parent_;                 // space -> storey
    std::map<Ucode, Ucode> element_parent_;               // element -> space
    std::map<Ucode, std::vector<Ucode>> space_elements_;  // space -> elements
    std::map<Ucode, std::vector<Ucode>> zone_storeys_;    // zone -> storeys
    std::map<int, Ucode> floor_index_;                    // floor value -> storey
};

// Parse + validate the JSON topology document (see docs/formats.md).
// Unknown fields are rejected.
TopologyGraph load_topology(const std::string& json_text);
TopologyGraph load_topology_file(const std::string& path);

}  // namespace sbk::topology
