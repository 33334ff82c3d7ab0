#pragma once
// Randomized text-based household simulation. Generates a world, a stream of
// human events (ground-truth deltas plus NL renderings) and tasks (NL plus
// ground-truth goals), runs agent variants against identical streams, and
// scores state-change and plan success against the evolving ground truth.
//
// The stream is generated entirely from the seed before any agent runs, so
// every variant consumes byte-identical input. The oracle backend is staged
// step by step with the generator's own answers; the faulty backend keys its
// draws on the step index, so paired runs face identical corruption.

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgplan/demo_world.hpp"
#include "kgplan/task_pipeline.hpp"
#include "kgplan/updater.hpp"

namespace kgplan {

struct WorldSpec {
    int rooms = 8;        // 5 common rooms plus bedrooms
    int persons = 5;
    int small_items = 60;
    int shelf_levels = 5;
    int events = 50;
    int tasks = 20;
    int min_triplets = 250;  // add items until the world reaches this size

    static constexpr int kMaxRooms = 24;
    static constexpr int kMaxPersons = 12;
    static constexpr int kMaxItems = 400;
    static constexpr int kMaxSteps = 2000;

    void check() const {
        if (rooms < 5 || rooms > kMaxRooms || persons < 1 || persons > kMaxPersons ||
            small_items < 4 || small_items > kMaxItems || shelf_levels < 1 ||
            shelf_levels > 9 || events < 0 || tasks < 0 || events + tasks > kMaxSteps)
            throw std::invalid_argument("world spec outside supported caps");
    }
};

struct SimEvent {
    GraphDelta delta;  // ground truth
    std::string text;
    OracleAnswers answers;
};

struct SimTask {
    std::string text;
    GoalFormula goal;
    OracleAnswers answers;
    Problem truth_problem;      // full ground-truth init at issue time
    Plan truth_plan;
    GraphDelta execution_delta;  // effect of executing the ground-truth plan
};

struct SimStep {
    enum class Kind { Event, Task };
    Kind kind = Kind::Event;
    SimEvent event;
    SimTask task;
    TripletSet truth_after;  // ground-truth triplets after this step
};

struct SimStream {
    WorldGraph initial;
    std::vector<SimStep> steps;
    std::string digest;  // fnv-1a over the serialized stream
};

// --- scoring -------------------------------------------------------------

struct StateDiff {
    bool match = false;
    TripletSet missing;  // in truth, not in agent
    TripletSet extra;    // in agent, not in truth
};

inline StateDiff score_state_change(const WorldGraph& agent, const TripletSet& truth) {
    StateDiff d;
    for (const auto& t : truth)
        if (!agent.triplets().count(t)) d.missing.insert(t);
    for (const auto& t : agent.triplets())
        if (!truth.count(t)) d.extra.insert(t);
    d.match = d.missing.empty() && d.extra.empty();
    return d;
}

enum class PlanScore { Success, Inexecutable, GoalUnsatisfied, NoPlan };

inline const char* plan_score_name(PlanScore s) {
    switch (s) {
        case PlanScore::Success: return "success";
        case PlanScore::Inexecutable: return "inexecutable";
        case PlanScore::GoalUnsatisfied: return "goal-unsatisfied";
        case PlanScore::NoPlan: return "no-plan";
    }
    return "?";
}

// Validates an agent plan against the ground-truth problem.
inline PlanScore score_plan(const Domain& d, const Problem& truth, const PlanOutcome& outcome) {
    if (!outcome.success) return PlanScore::NoPlan;
    ValidationResult v = validate(d, truth, outcome.plan);
    if (v.valid) return PlanScore::Success;
    return v.failed_step > 0 ? PlanScore::Inexecutable : PlanScore::GoalUnsatisfied;
}

// --- generation ------------------------------------------------------------

namespace simgen {

inline std::string mention(const std::string& entity_name) {
    auto pos = entity_name.find("_bedroom");
    if (pos != std::string::npos && pos + 8 == entity_name.size())
        return entity_name.substr(0, pos) + "'s bedroom";
    std::string out = entity_name;
    for (auto& c : out)
        if (c == '_') c = ' ';
    return out;
}

struct QuerySketch {
    struct Node {
        std::string text;
        std::string type_hint;
    };
    std::vector<Node> nodes;
    std::vector<std::tuple<size_t, std::string, size_t>> relations;

    size_t add(const std::string& text, const std::string& hint = "") {
        for (size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].text == text) return i;
        nodes.push_back({text, hint});
        return nodes.size() - 1;
    }

    void relate(size_t a, const std::string& label, size_t b) {
        relations.emplace_back(a, label, b);
    }

    std::string render() const {
        std::ostringstream os;
        os << "ENTITIES:\n";
        for (size_t i = 0; i < nodes.size(); ++i) {
            os << (i + 1) << ". " << nodes[i].text;
            if (!nodes[i].type_hint.empty()) os << " | type: " << nodes[i].type_hint;
            os << "\n";
        }
        if (!relations.empty()) {
            os << "RELATIONS:\n";
            for (const auto& [a, label, b] : relations)
                os << (a + 1) << " " << label << " " << (b + 1) << "\n";
        }
        return os.str();
    }
};

inline std::string render_update_answer(const GraphDelta& d) {
    auto list = [](const TripletSet& v) {
        if (v.empty()) return std::string("empty");
        std::vector<std::string> parts;
        for (const auto& t : v) parts.push_back(t.str());
        return join(parts, ", ");
    };
    return "REMOVE: " + list(d.removals) + "\nADD: " + list(d.additions);
}

inline std::string render_selection(const GraphDelta& d) {
    std::set<std::string> names;
    for (const auto& set : {d.removals, d.additions})
        for (const auto& t : set) {
            names.insert(t.subject);
            if (t.form == Triplet::Form::Relationship) names.insert(t.object);
        }
    return "RELEVANT: " + join(names, ", ");
}

}  // namespace simgen

class Simulator {
public:
    Simulator() : domain_(demo_domain()) {}

    const std::shared_ptr<const Domain>& domain() const { return domain_; }

    WorldGraph generate_world(uint64_t seed, const WorldSpec& spec) const {
        spec.check();
        Rng rng = Rng(seed).fork(1);
        WorldGraph g(domain_);

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

        static const std::vector<std::string> person_pool = {
            "gary", "jessica", "kathleen", "jerry", "alexander", "maria",
            "ahmed", "priya", "chen", "sofia", "tomas", "amara"};
        std::vector<std::string> persons(person_pool.begin(),
                                         person_pool.begin() + spec.persons);

        std::vector<std::string> rooms = {"kitchen", "living_room", "bathroom", "laundry_room",
                                          "dining_room"};
        for (int i = 0; static_cast<int>(rooms.size()) < spec.rooms; ++i)
            rooms.push_back(person_pool[static_cast<size_t>(i) % person_pool.size()] +
                            "_bedroom");
        for (const auto& r : rooms) ent(r, "room");
        // hub topology plus a ring for alternate routes
        for (const auto& r : rooms)
            if (r != "living_room") {
                rel("living_room", "room_connected", r);
                rel(r, "room_connected", "living_room");
            }
        for (size_t i = 0; i + 1 < rooms.size(); i += 2) {
            if (rooms[i] == "living_room" || rooms[i + 1] == "living_room") continue;
            rel(rooms[i], "room_connected", rooms[i + 1]);
            rel(rooms[i + 1], "room_connected", rooms[i]);
        }

        ent("robot", "agent");
        rel("robot", "agent_at", "living_room");
        prop("robot", "agent_hand_empty");

        for (const auto& p : persons) {
            ent(p, "person");
            rel(p, "person_in_room", rng.pick(rooms));
        }

        const char* ordinals[] = {"1st", "2nd", "3rd", "4th", "5th", "6th", "7th", "8th", "9th"};
        for (int i = 1; i <= spec.shelf_levels; ++i)
            ent("shelf_level_" + std::to_string(i), "shelf_level",
                {{"ordinal", ordinals[i - 1]}});

        std::vector<std::string> tables, shelves, sinks, fridges, lights;
        for (const auto& r : rooms) {
            std::string light = r + "_light";
            ent(light, "light");
            rel(light, "in_room", r);
            lights.push_back(light);
            if (rng.chance(0.5)) prop(light, "light_on");

            bool bedroom = r.find("_bedroom") != std::string::npos;
            if (r == "kitchen" || r == "living_room" || r == "dining_room" || bedroom) {
                std::string t = r + "_table";
                ent(t, "table");
                rel(t, "in_room", r);
                tables.push_back(t);
            }
            if (bedroom || r == "living_room") {
                std::string s = r + "_shelf";
                ent(s, "shelf");
                rel(s, "in_room", r);
                for (int i = 1; i <= spec.shelf_levels; ++i)
                    rel(s, "shelf_has_level", "shelf_level_" + std::to_string(i));
                shelves.push_back(s);
            }
            if (r == "kitchen" || r == "bathroom" || r == "laundry_room") {
                std::string s = r + "_sink";
                ent(s, "sink", {{"kind", "faucet"}});
                rel(s, "in_room", r);
                sinks.push_back(s);
                if (rng.chance(0.2)) prop(s, "faucet_on");
            }
        }
        ent("kitchen_fridge", "fridge");
        rel("kitchen_fridge", "in_room", "kitchen");
        fridges.push_back("kitchen_fridge");
        ent("living_room_tv", "tv");
        rel("living_room_tv", "in_room", "living_room");
        if (rng.chance(0.3)) prop("living_room_tv", "tv_on");
        ent("kitchen_phone", "phone");
        rel("kitchen_phone", "in_room", "kitchen");

        // items: unique color x kind names so NL mentions resolve uniquely
        struct ItemKind {
            const char* kind;
            const char* type;
        };
        static const std::vector<ItemKind> kinds = {
            {"pen", "pen"},     {"book", "book"},  {"apple", "food"}, {"banana", "food"},
            {"cereal", "food"}, {"bread", "food"}, {"soup", "food"},  {"mug", "dish"},
            {"bowl", "dish"},   {"plate", "dish"}, {"cup", "dish"}};
        static const std::vector<std::string> colors = {"red",    "blue",  "green",  "white",
                                                        "black",  "brown", "yellow", "purple",
                                                        "orange", "pink",  "gray",   "teal"};
        int added = 0;
        int combo = 0;
        while (added < spec.small_items ||
               static_cast<int>(g.triplets().size()) < spec.min_triplets) {
            if (added >= WorldSpec::kMaxItems) break;
            const ItemKind& k = kinds[static_cast<size_t>(combo) % kinds.size()];
            const std::string& color = colors[(static_cast<size_t>(combo) / kinds.size()) %
                                              colors.size()];
            int round = combo / static_cast<int>(kinds.size() * colors.size());
            ++combo;
            std::string name = color + "_" + k.kind;
            if (round > 0) name += "_" + std::to_string(round + 1);
            std::map<std::string, std::string> attrs = {{"color", color}, {"kind", k.kind}};
            if (std::string(k.kind) == "mug" || std::string(k.kind) == "bowl" ||
                std::string(k.kind) == "cup")
                attrs["role"] = "container";
            ent(name, k.type);
            ++added;

            // initial placement
            double roll = rng.unit();
            if (std::string(k.type) == "food" && roll < 0.3) {
                rel(name, "in_fridge", rng.pick(fridges));
            } else if (roll < 0.55 && !shelves.empty()) {
                rel(name, "placed_at_shelf", rng.pick(shelves));
                rel(name, "on_shelf_level",
                    "shelf_level_" + std::to_string(rng.range(1, spec.shelf_levels)));
            } else {
                rel(name, "placed_at_table", rng.pick(tables));
            }
            if (std::string(k.type) == "dish") {
                if (rng.chance(0.8)) prop(name, "dish_clean");
                if (rng.chance(0.7)) prop(name, "container_empty");
            }
        }
        return g;
    }

    SimStream generate(uint64_t seed, const WorldSpec& spec) const {
        spec.check();
        SimStream stream;
        stream.initial = generate_world(seed, spec);
        Rng rng = Rng(seed).fork(2);

        WorldGraph truth = stream.initial;
        int task_gap = spec.tasks > 0 ? std::max(1, spec.events / std::max(spec.tasks, 1)) : 0;
        int events_done = 0, tasks_done = 0;

        while (events_done < spec.events || tasks_done < spec.tasks) {
            bool task_turn =
                tasks_done < spec.tasks &&
                (events_done >= spec.events ||
                 (task_gap > 0 && events_done > 0 && events_done % task_gap == 0 &&
                  tasks_done < events_done / task_gap));
            SimStep step;
            if (task_turn) {
                step.kind = SimStep::Kind::Task;
                step.task = gen_task(rng, truth);
                truth = truth.apply_delta(step.task.execution_delta);
                ++tasks_done;
            } else {
                step.kind = SimStep::Kind::Event;
                step.event = gen_event(rng, truth);
                truth = truth.apply_delta(step.event.delta);
                ++events_done;
            }
            step.truth_after = truth.triplets();
            stream.steps.push_back(std::move(step));
        }

        uint64_t h = fnv1a64(serialize_graph(stream.initial));
        for (const auto& step : stream.steps) {
            h = fnv1a64(step.kind == SimStep::Kind::Event ? "event" : "task", h);
            if (step.kind == SimStep::Kind::Event) {
                h = fnv1a64(step.event.text, h);
                h = fnv1a64(simgen::render_update_answer(step.event.delta), h);
            } else {
                h = fnv1a64(step.task.text, h);
                h = fnv1a64(step.task.answers.goal, h);
                h = fnv1a64(print_plan(step.task.truth_plan), h);
            }
        }
        stream.digest = to_hex(h);
        return stream;
    }

private:
    // --- event generation -----------------------------------------------

    struct Located {
        std::string item;
        Triplet location;  // the triplet pinning the item down
    };

    static std::vector<std::string> of_type(const WorldGraph& g, const std::string& type) {
        std::vector<std::string> out;
        for (const auto& [name, e] : g.entities())
            if (g.domain()->is_subtype(e.type, type)) out.push_back(name);
        return out;
    }

    static std::string room_of(const WorldGraph& g, const std::string& entity,
                               const std::string& pred) {
        for (const auto& t : g.triplets())
            if (t.form == Triplet::Form::Relationship && t.subject == entity &&
                t.predicate == pred)
                return t.object;
        return "";
    }

    static std::vector<Located> items_with(const WorldGraph& g, const std::string& pred) {
        std::vector<Located> out;
        for (const auto& t : g.triplets())
            if (t.form == Triplet::Form::Relationship && t.predicate == pred)
                out.push_back({t.subject, t});
        return out;
    }

    static std::vector<std::string> props_on(const WorldGraph& g, const std::string& pred) {
        std::vector<std::string> out;
        for (const auto& t : g.triplets())
            if (t.form == Triplet::Form::Property && t.predicate == pred)
                out.push_back(t.subject);
        return out;
    }

    SimEvent gen_event(Rng& rng, const WorldGraph& truth) const {
        for (int tries = 0; tries < 64; ++tries) {
            int archetype = rng.range(0, 8);
            std::optional<SimEvent> e;
            switch (archetype) {
                case 0: e = ev_person_move(rng, truth); break;
                case 1: e = ev_pick(rng, truth); break;
                case 2: e = ev_place(rng, truth); break;
                case 3: e = ev_light(rng, truth); break;
                case 4: e = ev_faucet(rng, truth); break;
                case 5: e = ev_tv(rng, truth); break;
                case 6: e = ev_phone(rng, truth); break;
                case 7: e = ev_dish_dirty(rng, truth); break;
                case 8: e = ev_fridge(rng, truth); break;
            }
            if (e) return std::move(*e);
        }
        throw std::logic_error("no applicable event archetype; world too small");
    }

    static SimEvent finish_event(const WorldGraph& truth, GraphDelta delta, std::string text,
                                 simgen::QuerySketch sketch) {
        (void)truth;
        SimEvent e;
        e.delta = std::move(delta);
        e.text = std::move(text);
        e.answers.query_graph = sketch.render();
        e.answers.update = simgen::render_update_answer(e.delta);
        e.answers.selection = simgen::render_selection(e.delta);
        return e;
    }

    std::optional<SimEvent> ev_person_move(Rng& rng, const WorldGraph& g) const {
        auto persons = of_type(g, "person");
        auto rooms = of_type(g, "room");
        if (persons.empty() || rooms.size() < 2) return std::nullopt;
        std::string p = rng.pick(persons);
        std::string cur = room_of(g, p, "person_in_room");
        std::string dst = rng.pick(rooms);
        if (dst == cur) return std::nullopt;
        GraphDelta d;
        d.removals.insert(Triplet::rel(p, "person_in_room", cur));
        d.additions.insert(Triplet::rel(p, "person_in_room", dst));
        static const std::vector<std::string> verbs = {"went to", "walked to", "moved to",
                                                       "headed to"};
        std::string verb = rng.pick(verbs);
        simgen::QuerySketch q;
        size_t pn = q.add(simgen::mention(p), "person");
        size_t rn = q.add(simgen::mention(dst), "room");
        q.relate(pn, "went_to", rn);
        return finish_event(g, std::move(d),
                            capitalize(simgen::mention(p)) + " " + verb + " the " +
                                simgen::mention(dst) + ".",
                            std::move(q));
    }

    std::optional<SimEvent> ev_pick(Rng& rng, const WorldGraph& g) const {
        auto table_items = items_with(g, "placed_at_table");
        auto shelf_items = items_with(g, "placed_at_shelf");
        auto persons = of_type(g, "person");
        if (persons.empty() || (table_items.empty() && shelf_items.empty())) return std::nullopt;
        bool from_table = !table_items.empty() && (shelf_items.empty() || rng.chance(0.6));
        Located it = from_table ? rng.pick(table_items) : rng.pick(shelf_items);
        std::string p = rng.pick(persons);
        std::string furniture = it.location.object;
        std::string room = room_of(g, furniture, "in_room");
        std::string cur = room_of(g, p, "person_in_room");

        GraphDelta d;
        d.removals.insert(it.location);
        if (!from_table) {
            for (const auto& t : g.triplets())
                if (t.predicate == "on_shelf_level" && t.subject == it.item)
                    d.removals.insert(t);
        }
        d.additions.insert(Triplet::rel(it.item, "in_person_hand", p));
        std::string text;
        static const std::vector<std::string> verbs = {"picked up", "grabbed", "took"};
        std::string verb = rng.pick(verbs);
        if (cur != room) {
            d.removals.insert(Triplet::rel(p, "person_in_room", cur));
            d.additions.insert(Triplet::rel(p, "person_in_room", room));
            text = capitalize(simgen::mention(p)) + " went to the " + simgen::mention(room) +
                   " and " + verb + " the " + simgen::mention(it.item) + " from the " +
                   (from_table ? "table" : "shelf") + ".";
        } else {
            text = capitalize(simgen::mention(p)) + " " + verb + " the " +
                   simgen::mention(it.item) + " from the " + (from_table ? "table" : "shelf") +
                   " in the " + simgen::mention(room) + ".";
        }
        simgen::QuerySketch q;
        size_t pn = q.add(simgen::mention(p), "person");
        size_t in = q.add(simgen::mention(it.item));
        size_t fn = q.add(from_table ? "table" : "shelf");
        size_t rn = q.add(simgen::mention(room), "room");
        q.relate(in, "placed_at", fn);
        q.relate(fn, "in", rn);
        q.relate(pn, "holds", in);
        return finish_event(g, std::move(d), std::move(text), std::move(q));
    }

    std::optional<SimEvent> ev_place(Rng& rng, const WorldGraph& g) const {
        auto held = items_with(g, "in_person_hand");
        if (held.empty()) return std::nullopt;
        Located it = rng.pick(held);
        std::string p = it.location.object;
        auto tables = of_type(g, "table");
        auto shelves = of_type(g, "shelf");
        bool to_table = !tables.empty() && (shelves.empty() || rng.chance(0.6));
        std::string furniture = to_table ? rng.pick(tables) : rng.pick(shelves);
        std::string room = room_of(g, furniture, "in_room");
        std::string cur = room_of(g, p, "person_in_room");

        GraphDelta d;
        d.removals.insert(it.location);
        std::string level;
        if (to_table) {
            d.additions.insert(Triplet::rel(it.item, "placed_at_table", furniture));
        } else {
            d.additions.insert(Triplet::rel(it.item, "placed_at_shelf", furniture));
            int max_level = 1;
            for (const auto& t : g.triplets())
                if (t.predicate == "shelf_has_level" && t.subject == furniture) ++max_level;
            level = "shelf_level_" + std::to_string(rng.range(1, std::max(1, max_level - 1)));
            d.additions.insert(Triplet::rel(it.item, "on_shelf_level", level));
        }
        static const std::vector<std::string> verbs = {"placed", "put", "set"};
        std::string verb = rng.pick(verbs);
        std::string text;
        std::string where = to_table ? "table" : (level.empty() ? "shelf" : "shelf");
        std::string level_phrase =
            level.empty() ? "" : (" on level " + level.substr(level.rfind('_') + 1));
        if (cur != room) {
            d.removals.insert(Triplet::rel(p, "person_in_room", cur));
            d.additions.insert(Triplet::rel(p, "person_in_room", room));
            text = capitalize(simgen::mention(p)) + " went to the " + simgen::mention(room) +
                   " and " + verb + " the " + simgen::mention(it.item) + " on the " + where +
                   level_phrase + ".";
        } else {
            text = capitalize(simgen::mention(p)) + " " + verb + " the " +
                   simgen::mention(it.item) + " on the " + where + " in the " +
                   simgen::mention(room) + level_phrase + ".";
        }
        simgen::QuerySketch q;
        size_t pn = q.add(simgen::mention(p), "person");
        size_t in = q.add(simgen::mention(it.item));
        size_t fn = q.add(where);
        size_t rn = q.add(simgen::mention(room), "room");
        if (!level.empty()) q.add("level " + level.substr(level.rfind('_') + 1));
        q.relate(in, "placed_at", fn);
        q.relate(fn, "in", rn);
        q.relate(pn, "went_to", rn);
        return finish_event(g, std::move(d), std::move(text), std::move(q));
    }

    std::optional<SimEvent> toggle_event(Rng& rng, const WorldGraph& g, const std::string& type,
                                         const std::string& state_pred,
                                         const std::string& thing_word,
                                         const std::string& on_verb,
                                         const std::string& off_verb) const {
        auto things = of_type(g, type);
        if (things.empty()) return std::nullopt;
        std::string thing = rng.pick(things);
        bool on = g.triplets().count(Triplet::prop(thing, state_pred)) > 0;
        auto persons = of_type(g, "person");
        if (persons.empty()) return std::nullopt;
        std::string p = rng.pick(persons);
        std::string room = room_of(g, thing, "in_room");

        GraphDelta d;
        if (on)
            d.removals.insert(Triplet::prop(thing, state_pred));
        else
            d.additions.insert(Triplet::prop(thing, state_pred));
        std::string text = capitalize(simgen::mention(p)) + " " + (on ? off_verb : on_verb) +
                           " the " + thing_word + " in the " + simgen::mention(room) + ".";
        simgen::QuerySketch q;
        size_t tn = q.add(thing_word, type);
        size_t rn = q.add(simgen::mention(room), "room");
        q.relate(tn, "in", rn);
        q.add(simgen::mention(p), "person");
        return finish_event(g, std::move(d), std::move(text), std::move(q));
    }

    std::optional<SimEvent> ev_light(Rng& rng, const WorldGraph& g) const {
        return toggle_event(rng, g, "light", "light_on", "light", "turned on", "turned off");
    }
    std::optional<SimEvent> ev_faucet(Rng& rng, const WorldGraph& g) const {
        return toggle_event(rng, g, "sink", "faucet_on", "faucet", "turned on", "turned off");
    }
    std::optional<SimEvent> ev_tv(Rng& rng, const WorldGraph& g) const {
        return toggle_event(rng, g, "tv", "tv_on", "tv", "switched on", "switched off");
    }

    std::optional<SimEvent> ev_phone(Rng& rng, const WorldGraph& g) const {
        auto phones = of_type(g, "phone");
        if (phones.empty()) return std::nullopt;
        std::string ph = rng.pick(phones);
        std::string room = room_of(g, ph, "in_room");
        bool ringing = g.triplets().count(Triplet::prop(ph, "phone_ringing")) > 0;
        GraphDelta d;
        std::string text;
        simgen::QuerySketch q;
        size_t tn = q.add("phone", "phone");
        size_t rn = q.add(simgen::mention(room), "room");
        q.relate(tn, "in", rn);
        if (ringing) {
            auto persons = of_type(g, "person");
            if (persons.empty()) return std::nullopt;
            std::string p = rng.pick(persons);
            d.removals.insert(Triplet::prop(ph, "phone_ringing"));
            text = capitalize(simgen::mention(p)) + " answered the phone in the " +
                   simgen::mention(room) + ".";
            q.add(simgen::mention(p), "person");
        } else {
            d.additions.insert(Triplet::prop(ph, "phone_ringing"));
            text = "The phone in the " + simgen::mention(room) + " started ringing.";
        }
        return finish_event(g, std::move(d), std::move(text), std::move(q));
    }

    std::optional<SimEvent> ev_dish_dirty(Rng& rng, const WorldGraph& g) const {
        auto clean = props_on(g, "dish_clean");
        auto persons = of_type(g, "person");
        if (clean.empty() || persons.empty()) return std::nullopt;
        std::string dish = rng.pick(clean);
        std::string p = rng.pick(persons);
        GraphDelta d;
        d.removals.insert(Triplet::prop(dish, "dish_clean"));
        std::string text = capitalize(simgen::mention(p)) + " used the " +
                           simgen::mention(dish) + " and left it dirty.";
        simgen::QuerySketch q;
        q.add(simgen::mention(dish));
        q.add(simgen::mention(p), "person");
        return finish_event(g, std::move(d), std::move(text), std::move(q));
    }

    std::optional<SimEvent> ev_fridge(Rng& rng, const WorldGraph& g) const {
        auto fridges = of_type(g, "fridge");
        auto persons = of_type(g, "person");
        if (fridges.empty() || persons.empty()) return std::nullopt;
        std::string p = rng.pick(persons);
        auto in_fridge = items_with(g, "in_fridge");
        auto on_tables = items_with(g, "placed_at_table");
        std::vector<Located> food_on_tables;
        for (const auto& it : on_tables)
            if (g.domain()->is_subtype(g.find_entity(it.item)->type, "food"))
                food_on_tables.push_back(it);
        GraphDelta d;
        std::string text;
        simgen::QuerySketch q;
        if (!food_on_tables.empty() && (in_fridge.empty() || rng.chance(0.5))) {
            Located it = rng.pick(food_on_tables);
            std::string fridge = rng.pick(fridges);
            d.removals.insert(it.location);
            d.additions.insert(Triplet::rel(it.item, "in_fridge", fridge));
            text = capitalize(simgen::mention(p)) + " put the " + simgen::mention(it.item) +
                   " in the fridge.";
            size_t in = q.add(simgen::mention(it.item));
            size_t fn = q.add("fridge", "fridge");
            q.relate(in, "in", fn);
        } else if (!in_fridge.empty()) {
            Located it = rng.pick(in_fridge);
            auto tables = of_type(g, "table");
            if (tables.empty()) return std::nullopt;
            std::string table = rng.pick(tables);
            d.removals.insert(it.location);
            d.additions.insert(Triplet::rel(it.item, "placed_at_table", table));
            std::string room = room_of(g, table, "in_room");
            text = capitalize(simgen::mention(p)) + " took the " + simgen::mention(it.item) +
                   " out of the fridge and left it on the table in the " +
                   simgen::mention(room) + ".";
            size_t in = q.add(simgen::mention(it.item));
            size_t tn = q.add("table");
            size_t rn = q.add(simgen::mention(room), "room");
            q.relate(in, "placed_at", tn);
            q.relate(tn, "in", rn);
        } else {
            return std::nullopt;
        }
        q.add(simgen::mention(p), "person");
        return finish_event(g, std::move(d), std::move(text), std::move(q));
    }

    // --- task generation --------------------------------------------------

    SimTask gen_task(Rng& rng, const WorldGraph& truth) const {
        for (int tries = 0; tries < 64; ++tries) {
            int archetype = rng.range(0, 5);
            std::optional<SimTask> t;
            switch (archetype) {
                case 0: t = task_shelve(rng, truth); break;
                case 1: t = task_table(rng, truth); break;
                case 2: t = task_devices_off(rng, truth); break;
                case 3: t = task_wash(rng, truth); break;
                case 4: t = task_bring(rng, truth); break;
                case 5: t = task_fridge(rng, truth); break;
            }
            if (!t) continue;
            if (finalize_task(*t, truth)) return std::move(*t);
        }
        throw std::logic_error("no solvable task archetype; world too small");
    }

    // Solves the ground-truth problem, records the plan and its effects.
    bool finalize_task(SimTask& t, const WorldGraph& truth) const {
        t.truth_problem = make_problem(truth, truth.triplets(), t.goal, "truth");
        PlannerConfig cfg;
        cfg.timeout_ms = 20000;
        SolveResult r = solve(*domain_, t.truth_problem, cfg);
        if (r.status != SolveStatus::Solved) return false;
        t.truth_plan = r.plan;
        t.answers.goal = "(:goal " + goal_text(t.goal) + ")";

        // effect of executing the plan, as a graph delta
        std::set<Atom> state = t.truth_problem.init;
        for (const auto& step : t.truth_plan.steps) {
            const ActionSchema* schema = domain_->find_action(step.action);
            std::map<std::string, std::string> binding;
            for (size_t i = 0; i < step.args.size(); ++i)
                binding[schema->params[i].name] = step.args[i];
            for (const auto& lit : schema->effects)
                if (lit.negated) state.erase(detail::bind_atom(lit.atom, binding));
            for (const auto& lit : schema->effects)
                if (!lit.negated) state.insert(detail::bind_atom(lit.atom, binding));
        }
        TripletSet after = from_init_atoms(state, *domain_);
        for (const auto& tr : truth.triplets())
            if (!after.count(tr)) t.execution_delta.removals.insert(tr);
        for (const auto& tr : after)
            if (!truth.triplets().count(tr)) t.execution_delta.additions.insert(tr);
        t.execution_delta.source = DeltaSource::Perception;
        return true;
    }

    static std::string goal_text(const GoalFormula& g) {
        std::ostringstream os;
        pddl_detail_print(os, g);
        return os.str();
    }
    static void pddl_detail_print(std::ostringstream& os, const GoalFormula& g) {
        switch (g.kind) {
            case GoalFormula::Kind::Atom: os << g.atom.str(); break;
            case GoalFormula::Kind::Not: os << "(not " << g.atom.str() << ")"; break;
            case GoalFormula::Kind::And:
                os << "(and";
                for (const auto& c : g.children) {
                    os << " ";
                    pddl_detail_print(os, c);
                }
                os << ")";
                break;
            case GoalFormula::Kind::Forall:
                os << "(forall (" << g.quantified.name << " - " << g.quantified.type << ") ";
                pddl_detail_print(os, g.children.front());
                os << ")";
                break;
        }
    }

    std::optional<SimTask> task_shelve(Rng& rng, const WorldGraph& g) const {
        auto shelves = of_type(g, "shelf");
        auto items = of_type(g, "small_item");
        if (shelves.empty() || items.empty()) return std::nullopt;
        std::string item = rng.pick(items);
        std::string shelf = rng.pick(shelves);
        int levels = 0;
        for (const auto& t : g.triplets())
            if (t.predicate == "shelf_has_level" && t.subject == shelf) ++levels;
        if (levels == 0) return std::nullopt;
        int level = rng.range(1, levels);
        std::string level_name = "shelf_level_" + std::to_string(level);
        std::string room = room_of(g, shelf, "in_room");

        SimTask t;
        t.text = "Place the " + simgen::mention(item) + " on level " + std::to_string(level) +
                 " of the shelf in the " + simgen::mention(room) + ".";
        t.goal = GoalFormula::make_and(
            {GoalFormula::make_atom(Atom{"placed_at_shelf", {item, shelf}}),
             GoalFormula::make_atom(Atom{"on_shelf_level", {item, level_name}})});
        simgen::QuerySketch q;
        size_t in = q.add(simgen::mention(item));
        size_t sn = q.add("shelf");
        size_t rn = q.add(simgen::mention(room), "room");
        q.add("level " + std::to_string(level));
        q.relate(in, "placed_at", sn);
        q.relate(sn, "in", rn);
        t.answers.query_graph = q.render();
        t.answers.selection = "RELEVANT: " + item + ", " + shelf + ", " + room;
        return t;
    }

    std::optional<SimTask> task_table(Rng& rng, const WorldGraph& g) const {
        auto tables = of_type(g, "table");
        auto items = of_type(g, "small_item");
        if (tables.empty() || items.empty()) return std::nullopt;
        std::string item = rng.pick(items);
        std::string table = rng.pick(tables);
        std::string room = room_of(g, table, "in_room");
        SimTask t;
        t.text = "Put the " + simgen::mention(item) + " on the table in the " +
                 simgen::mention(room) + ".";
        t.goal = GoalFormula::make_and(
            {GoalFormula::make_atom(Atom{"placed_at_table", {item, table}})});
        simgen::QuerySketch q;
        size_t in = q.add(simgen::mention(item));
        size_t tn = q.add("table");
        size_t rn = q.add(simgen::mention(room), "room");
        q.relate(in, "placed_at", tn);
        q.relate(tn, "in", rn);
        t.answers.query_graph = q.render();
        t.answers.selection = "RELEVANT: " + item + ", " + table + ", " + room;
        return t;
    }

    std::optional<SimTask> task_devices_off(Rng&, const WorldGraph& g) const {
        SimTask t;
        t.text = "The water and electricity bills are high. Can you turn off all lights and "
                 "faucets?";
        Atom light{"light_on", {"?a"}};
        Atom faucet{"faucet_on", {"?b"}};
        t.goal = GoalFormula::make_and(
            {GoalFormula::make_forall({"?a", "light"}, GoalFormula::make_not(light)),
             GoalFormula::make_forall({"?b", "sink"}, GoalFormula::make_not(faucet))});
        simgen::QuerySketch q;
        q.add("lights", "light");
        q.add("faucets", "sink");
        t.answers.query_graph = q.render();
        std::string names;
        for (const auto& s : of_type(g, "light")) names += s + ", ";
        for (const auto& s : of_type(g, "sink")) names += s + ", ";
        t.answers.selection = "RELEVANT: " + names;
        return t;
    }

    std::optional<SimTask> task_wash(Rng&, const WorldGraph& g) const {
        // dirty dish = dish without dish_clean (closed world)
        std::vector<std::string> dirty;
        for (const auto& d : of_type(g, "dish"))
            if (!g.triplets().count(Triplet::prop(d, "dish_clean"))) dirty.push_back(d);
        if (dirty.empty()) return std::nullopt;
        SimTask t;
        t.text = "Please wash all the dishes.";
        Atom clean{"dish_clean", {"?d"}};
        t.goal = GoalFormula::make_and(
            {GoalFormula::make_forall({"?d", "dish"}, GoalFormula::make_atom(clean))});
        simgen::QuerySketch q;
        for (const auto& d : dirty) q.add(simgen::mention(d));
        q.add("sink", "sink");
        t.answers.query_graph = q.render();
        t.answers.selection = "RELEVANT: " + join(dirty, ", ") + ", kitchen_sink";
        return t;
    }

    std::optional<SimTask> task_bring(Rng& rng, const WorldGraph& g) const {
        auto food = of_type(g, "food");
        auto persons = of_type(g, "person");
        if (food.empty() || persons.empty()) return std::nullopt;
        std::string item = rng.pick(food);
        std::string p = rng.pick(persons);
        SimTask t;
        t.text = "Bring the " + simgen::mention(item) + " to " +
                 capitalize(simgen::mention(p)) + ".";
        t.goal =
            GoalFormula::make_and({GoalFormula::make_atom(Atom{"in_person_hand", {item, p}})});
        simgen::QuerySketch q;
        size_t in = q.add(simgen::mention(item));
        size_t pn = q.add(simgen::mention(p), "person");
        q.relate(pn, "holds", in);
        t.answers.query_graph = q.render();
        t.answers.selection = "RELEVANT: " + item + ", " + p;
        return t;
    }

    std::optional<SimTask> task_fridge(Rng& rng, const WorldGraph& g) const {
        auto food = of_type(g, "food");
        auto fridges = of_type(g, "fridge");
        if (food.empty() || fridges.empty()) return std::nullopt;
        std::string item = rng.pick(food);
        std::string fridge = rng.pick(fridges);
        if (g.triplets().count(Triplet::rel(item, "in_fridge", fridge))) return std::nullopt;
        SimTask t;
        t.text = "Put the " + simgen::mention(item) + " in the fridge.";
        t.goal =
            GoalFormula::make_and({GoalFormula::make_atom(Atom{"in_fridge", {item, fridge}})});
        simgen::QuerySketch q;
        size_t in = q.add(simgen::mention(item));
        size_t fn = q.add("fridge", "fridge");
        q.relate(in, "in", fn);
        t.answers.query_graph = q.render();
        t.answers.selection = "RELEVANT: " + item + ", " + fridge;
        return t;
    }

    static std::string capitalize(std::string s) {
        if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
        return s;
    }

    std::shared_ptr<const Domain> domain_;
};

}  // namespace kgplan
