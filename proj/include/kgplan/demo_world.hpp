#pragma once
// A small hand-built household world over the shipped domain. Used by the
// CLI demo mode and as a fixture for tests and the scripted failure
// scenarios. Mirrors data/household.pddl; keep the two in sync.

#include <memory>

#include "kgplan/pddl_parser.hpp"
#include "kgplan/world_graph.hpp"

namespace kgplan {

inline const char* household_domain_text();

inline std::shared_ptr<const Domain> demo_domain() {
    return std::make_shared<const Domain>(
        parse_domain(household_domain_text(), "household.pddl"));
}

inline WorldGraph demo_world(std::shared_ptr<const Domain> domain = nullptr) {
    if (!domain) domain = demo_domain();
    WorldGraph g(domain);

    auto ent = [&](const std::string& name, const std::string& type,
                   std::map<std::string, std::string> attrs = {}) {
        g.add_entity({name, type, std::move(attrs)});
    };
    auto rel = [&](const std::string& s, const std::string& p, const std::string& o) {
        g.add_triplet(Triplet::rel(s, p, o));
    };
    auto prop = [&](const std::string& s, const std::string& p) {
        g.add_triplet(Triplet::prop(s, p));
    };

    const std::vector<std::string> rooms = {"kitchen",        "living_room",
                                            "bathroom",       "laundry_room",
                                            "jerry_bedroom",  "alexander_bedroom",
                                            "jessica_bedroom"};
    for (const auto& r : rooms) ent(r, "room");
    // living_room is the hub; kitchen additionally opens into the laundry room
    for (const auto& r : rooms)
        if (r != "living_room") {
            rel("living_room", "room_connected", r);
            rel(r, "room_connected", "living_room");
        }
    rel("kitchen", "room_connected", "laundry_room");
    rel("laundry_room", "room_connected", "kitchen");

    ent("robot", "agent");
    rel("robot", "agent_at", "living_room");
    prop("robot", "agent_hand_empty");

    for (const auto& [p, r] : std::vector<std::pair<std::string, std::string>>{
             {"gary", "jessica_bedroom"},
             {"kathleen", "jerry_bedroom"},
             {"jessica", "laundry_room"},
             {"jerry", "living_room"},
             {"alexander", "alexander_bedroom"}}) {
        ent(p, "person");
        rel(p, "person_in_room", r);
    }

    for (const auto& r : rooms) {
        std::string light = r + "_light";
        ent(light, "light");
        rel(light, "in_room", r);
    }
    prop("laundry_room_light", "light_on");
    prop("kitchen_light", "light_on");

    ent("kitchen_table", "table");
    rel("kitchen_table", "in_room", "kitchen");
    ent("alexander_bedroom_table", "table");
    rel("alexander_bedroom_table", "in_room", "alexander_bedroom");

    const char* ordinals[] = {"1st", "2nd", "3rd", "4th", "5th"};
    for (int i = 1; i <= 5; ++i)
        ent("shelf_level_" + std::to_string(i), "shelf_level", {{"ordinal", ordinals[i - 1]}});
    for (const auto& s : {"jerry_bedroom_shelf", "alexander_bedroom_shelf"}) {
        ent(s, "shelf");
        rel(s, "in_room", std::string(s).substr(0, std::string(s).size() - 6));
        for (int i = 1; i <= 5; ++i)
            rel(s, "shelf_has_level", "shelf_level_" + std::to_string(i));
    }

    ent("kitchen_sink", "sink", {{"kind", "faucet"}});
    rel("kitchen_sink", "in_room", "kitchen");
    ent("bathroom_sink", "sink", {{"kind", "faucet"}});
    rel("bathroom_sink", "in_room", "bathroom");
    prop("bathroom_sink", "faucet_on");

    ent("kitchen_fridge", "fridge");
    rel("kitchen_fridge", "in_room", "kitchen");
    ent("living_room_tv", "tv");
    rel("living_room_tv", "in_room", "living_room");
    ent("kitchen_phone", "phone");
    rel("kitchen_phone", "in_room", "kitchen");

    ent("red_pen", "pen", {{"color", "red"}});
    rel("red_pen", "in_person_hand", "gary");
    ent("blue_pen", "pen", {{"color", "blue"}});
    rel("blue_pen", "placed_at_table", "kitchen_table");

    ent("blue_mug", "dish", {{"color", "blue"}, {"kind", "mug"}, {"role", "container"}});
    rel("blue_mug", "placed_at_table", "kitchen_table");
    prop("blue_mug", "dish_clean");
    prop("blue_mug", "container_empty");
    ent("white_bowl", "dish", {{"color", "white"}, {"kind", "bowl"}, {"role", "container"}});
    rel("white_bowl", "placed_at_table", "kitchen_table");
    prop("white_bowl", "dish_clean");
    prop("white_bowl", "container_empty");

    ent("apple", "food");
    rel("apple", "in_fridge", "kitchen_fridge");
    ent("cereal_box", "food");
    rel("cereal_box", "placed_at_table", "kitchen_table");

    ent("green_book", "book", {{"color", "green"}});
    rel("green_book", "placed_at_shelf", "jerry_bedroom_shelf");
    rel("green_book", "on_shelf_level", "shelf_level_1");

    return g;
}

// Predicates that carry static topology or cheap device/agent state; the
// planning pipeline always includes them in the synthesized init so
// retrieval pruning cannot hide a room connection or a light that is on.
inline std::vector<std::string> household_always_include() {
    return {"room_connected", "in_room",        "agent_at",   "agent_hand_empty",
            "in_agent_hand",  "shelf_has_level", "light_on",   "faucet_on",
            "tv_on",          "phone_ringing",   "dish_clean", "container_empty"};
}

// The Gary update rendered in the REMOVE:/ADD: output grammar.
inline std::string demo_update_text() {
    return "REMOVE: (red_pen, in_person_hand, gary), (gary, person_in_room, jessica_bedroom)\n"
           "ADD: (gary, person_in_room, alexander_bedroom), "
           "(red_pen, placed_at_table, alexander_bedroom_table)";
}

// The delta from the Gary walkthrough: he leaves Jessica's bedroom for
// Alexander's and sets the red pen down on the table there.
inline GraphDelta demo_gary_delta() {
    GraphDelta d;
    d.removals.insert(Triplet::rel("red_pen", "in_person_hand", "gary"));
    d.removals.insert(Triplet::rel("gary", "person_in_room", "jessica_bedroom"));
    d.additions.insert(Triplet::rel("gary", "person_in_room", "alexander_bedroom"));
    d.additions.insert(Triplet::rel("red_pen", "placed_at_table", "alexander_bedroom_table"));
    return d;
}

inline const char* household_domain_text() {
    return R"PDDL(
(define (domain household)
  (:requirements :strips :typing)
  (:types
    agent - object
    person - object
    room - object
    shelf_level - object
    item - object
    furniture - item
    appliance - item
    small_item - item
    table - furniture
    shelf - furniture
    fridge - furniture
    light - appliance
    sink - appliance
    tv - appliance
    phone - appliance
    book - small_item
    food - small_item
    dish - small_item
    pen - small_item)
  (:predicates
    (agent_at ?a - agent ?r - room)
    (person_in_room ?p - person ?r - room)
    (room_connected ?from - room ?to - room)
    (in_room ?i - item ?r - room)
    (placed_at_table ?o - small_item ?t - table)
    (placed_at_shelf ?o - small_item ?s - shelf)
    (on_shelf_level ?o - small_item ?l - shelf_level)
    (shelf_has_level ?s - shelf ?l - shelf_level)
    (in_fridge ?o - food ?f - fridge)
    (in_sink ?d - dish ?s - sink)
    (in_person_hand ?o - small_item ?p - person)
    (in_agent_hand ?o - small_item ?a - agent)
    (agent_hand_empty ?a - agent)
    (light_on ?l - light)
    (faucet_on ?s - sink)
    (tv_on ?t - tv)
    (phone_ringing ?p - phone)
    (dish_clean ?d - dish)
    (container_empty ?d - dish))
  (:action move_to_room
    :parameters (?a - agent ?from - room ?to - room)
    :precondition (and (agent_at ?a ?from) (room_connected ?from ?to))
    :effect (and (not (agent_at ?a ?from)) (agent_at ?a ?to)))
  (:action turn_on_light
    :parameters (?l - light ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?l ?r))
    :effect (and (light_on ?l)))
  (:action turn_off_light
    :parameters (?l - light ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?l ?r) (light_on ?l))
    :effect (and (not (light_on ?l))))
  (:action turn_on_faucet
    :parameters (?s - sink ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?s ?r))
    :effect (and (faucet_on ?s)))
  (:action turn_off_faucet
    :parameters (?s - sink ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?s ?r) (faucet_on ?s))
    :effect (and (not (faucet_on ?s))))
  (:action turn_on_tv
    :parameters (?t - tv ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?t ?r))
    :effect (and (tv_on ?t)))
  (:action turn_off_tv
    :parameters (?t - tv ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?t ?r) (tv_on ?t))
    :effect (and (not (tv_on ?t))))
  (:action answer_phone
    :parameters (?p - phone ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?p ?r) (phone_ringing ?p))
    :effect (and (not (phone_ringing ?p))))
  (:action pick_from_table
    :parameters (?o - small_item ?t - table ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?t ?r) (placed_at_table ?o ?t)
                       (agent_hand_empty ?a))
    :effect (and (not (placed_at_table ?o ?t)) (not (agent_hand_empty ?a))
                 (in_agent_hand ?o ?a)))
  (:action place_at_table
    :parameters (?o - small_item ?t - table ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?t ?r) (in_agent_hand ?o ?a))
    :effect (and (not (in_agent_hand ?o ?a)) (placed_at_table ?o ?t)
                 (agent_hand_empty ?a)))
  (:action pick_from_shelf
    :parameters (?o - small_item ?s - shelf ?l - shelf_level ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?s ?r) (placed_at_shelf ?o ?s)
                       (on_shelf_level ?o ?l) (agent_hand_empty ?a))
    :effect (and (not (placed_at_shelf ?o ?s)) (not (on_shelf_level ?o ?l))
                 (not (agent_hand_empty ?a)) (in_agent_hand ?o ?a)))
  (:action place_at_shelf
    :parameters (?o - small_item ?s - shelf ?a - agent ?r - room ?l - shelf_level)
    :precondition (and (agent_at ?a ?r) (in_room ?s ?r) (shelf_has_level ?s ?l)
                       (in_agent_hand ?o ?a))
    :effect (and (not (in_agent_hand ?o ?a)) (placed_at_shelf ?o ?s)
                 (on_shelf_level ?o ?l) (agent_hand_empty ?a)))
  (:action put_in_fridge
    :parameters (?o - food ?f - fridge ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?f ?r) (in_agent_hand ?o ?a))
    :effect (and (not (in_agent_hand ?o ?a)) (in_fridge ?o ?f) (agent_hand_empty ?a)))
  (:action take_from_fridge
    :parameters (?o - food ?f - fridge ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?f ?r) (in_fridge ?o ?f)
                       (agent_hand_empty ?a))
    :effect (and (not (in_fridge ?o ?f)) (not (agent_hand_empty ?a)) (in_agent_hand ?o ?a)))
  (:action wash_dish
    :parameters (?d - dish ?s - sink ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?s ?r) (in_agent_hand ?d ?a))
    :effect (and (not (in_agent_hand ?d ?a)) (in_sink ?d ?s) (dish_clean ?d)
                 (agent_hand_empty ?a)))
  (:action take_from_sink
    :parameters (?d - dish ?s - sink ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (in_room ?s ?r) (in_sink ?d ?s)
                       (agent_hand_empty ?a))
    :effect (and (not (in_sink ?d ?s)) (not (agent_hand_empty ?a)) (in_agent_hand ?d ?a)))
  (:action take_from_person
    :parameters (?o - small_item ?p - person ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (person_in_room ?p ?r) (in_person_hand ?o ?p)
                       (agent_hand_empty ?a))
    :effect (and (not (in_person_hand ?o ?p)) (not (agent_hand_empty ?a))
                 (in_agent_hand ?o ?a)))
  (:action give_to_person
    :parameters (?o - small_item ?p - person ?r - room ?a - agent)
    :precondition (and (agent_at ?a ?r) (person_in_room ?p ?r) (in_agent_hand ?o ?a))
    :effect (and (not (in_agent_hand ?o ?a)) (in_person_hand ?o ?p)
                 (agent_hand_empty ?a)))
)
)PDDL";
}

}  // namespace kgplan
