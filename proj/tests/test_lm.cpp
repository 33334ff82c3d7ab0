#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "kgplan/demo_world.hpp"
#include "kgplan/lm.hpp"
#include "kgplan/pddl_parser.hpp"

using namespace kgplan;

TEST_CASE("templates render each section exactly once, in template order") {
    TemplateSet t = TemplateSet::builtin();
    std::vector<std::pair<std::string, std::string>> sections = {
        {"entities", "robot, gary"},
        {"context", "(red_pen, in_person_hand, gary)"},
        {"update", "Gary hummed a tune."},
        {"errors", ""}};
    std::string rendered = t.render("update", sections);
    size_t prev = 0;
    for (const auto& [name, value] : sections) {
        if (value.empty()) continue;
        size_t pos = rendered.find(value, prev);
        REQUIRE(pos != std::string::npos);
        CHECK(rendered.find(value, pos + 1) == std::string::npos);
        prev = pos;
    }
    CHECK(rendered.find("{{") == std::string::npos);

    SECTION("unknown or repeated sections are errors") {
        CHECK_THROWS_AS(t.render("update", {{"bogus", "x"}}), LmError);
        CHECK_THROWS_AS(t.render("update", {{"update", "a"}, {"update", "b"}}), LmError);
    }

    SECTION("unfilled placeholder is an error") {
        CHECK_THROWS_AS(t.render("update", {{"update", "a"}}), LmError);
    }

    SECTION("empty sections render the template text verbatim around them") {
        std::string empty_render =
            t.render("query_graph", {{"text", ""}});
        CHECK(empty_render == t.render("query_graph", {{"text", ""}}));
        CHECK(empty_render.find("Text: \n") != std::string::npos);
    }
}

TEST_CASE("gateway appends transcripts and enforces the token ceiling") {
    auto backend = std::make_shared<ScriptedBackend>(
        std::vector<std::string>{"REMOVE: empty\nADD: empty", "second", "third"});
    LmGateway gw(backend);

    PromptBundle p = gw.make_prompt("update", {{"entities", "x"},
                                               {"context", "(a, b, c)"},
                                               {"update", "nothing happened"},
                                               {"errors", ""}});
    std::string out = gw.complete(p);
    CHECK(out == "REMOVE: empty\nADD: empty");
    REQUIRE(gw.transcript().size() == 1);
    const auto& e = gw.transcript().entries()[0];
    CHECK(e.input_tokens == approx_tokens(p.rendered));
    CHECK(e.output_tokens == approx_tokens(out));
    CHECK(gw.transcript().total_tokens() == e.input_tokens + e.output_tokens);

    SECTION("token totals equal the sum over entries") {
        gw.complete(p);
        long in = 0, out_sum = 0;
        for (const auto& entry : gw.transcript().entries()) {
            in += entry.input_tokens;
            out_sum += entry.output_tokens;
        }
        CHECK(gw.transcript().total_input_tokens() == in);
        CHECK(gw.transcript().total_output_tokens() == out_sum);
    }

    SECTION("budget-exceeded fires once the ceiling is reached") {
        gw.set_token_ceiling(e.input_tokens + e.output_tokens);
        CHECK_THROWS_AS(gw.complete(p), BudgetExceeded);
    }
}

TEST_CASE("transcript jsonl round-trips") {
    LmTranscript t;
    t.append({"update", "prompt \"with quotes\"\nand newline", "REMOVE: empty\nADD: empty", 10, 4});
    t.append({"goal", "p2", "(:goal (and))", 5, 3});
    std::ostringstream os;
    t.dump_jsonl(os);
    std::istringstream is(os.str());
    auto loaded = LmTranscript::load_jsonl(is);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].prompt == "prompt \"with quotes\"\nand newline");
    CHECK(loaded[0].completion == "REMOVE: empty\nADD: empty");
    CHECK(loaded[1].template_id == "goal");
}

TEST_CASE("parse_update handles the documented grammar") {
    SECTION("paper-style completion with one removal and two additions") {
        ParsedUpdate u = parse_update(
            "REMOVE: (red_pen, in_hand, kathleen)\n"
            "ADD: (red_pen, placed_at_shelf, jerry_bedroom_shelf), "
            "(red_pen, on_shelf_level, shelf_level_3)");
        REQUIRE(u.removals.size() == 1);
        REQUIRE(u.additions.size() == 2);
        CHECK(u.removals[0] == RawTriplet{"red_pen", "in_hand", "kathleen"});
        CHECK(u.additions[1] == RawTriplet{"red_pen", "on_shelf_level", "shelf_level_3"});
    }

    SECTION("empty markers produce an empty delta") {
        ParsedUpdate u = parse_update("REMOVE: \nADD: empty");
        CHECK(u.removals.empty());
        CHECK(u.additions.empty());
    }

    SECTION("whitespace and case are insignificant") {
        ParsedUpdate u = parse_update("remove:\n  (a, b, c) ,\n  (d, e, f)\nadd:\n  (g, h, true)");
        CHECK(u.removals.size() == 2);
        REQUIRE(u.additions.size() == 1);
        CHECK(u.additions[0].property_form());
    }

    SECTION("missing closing parenthesis reports the span") {
        try {
            parse_update("REMOVE: (a, b, c\nADD: empty");
            FAIL("expected parse error");
        } catch (const OutputParseError& e) {
            CHECK(std::string(e.what()).find("(a, b, c") != std::string::npos);
        }
    }

    SECTION("other malformed shapes are rejected, not skipped") {
        CHECK_THROWS_AS(parse_update("ADD: empty"), OutputParseError);
        CHECK_THROWS_AS(parse_update("REMOVE: (a, b)\nADD: empty"), OutputParseError);
        CHECK_THROWS_AS(parse_update("REMOVE: (a, b, c, d)\nADD: empty"), OutputParseError);
        CHECK_THROWS_AS(parse_update("chat before REMOVE: empty ADD: empty"), OutputParseError);
        CHECK_THROWS_AS(parse_update("ADD: empty\nREMOVE: empty"), OutputParseError);
    }

    SECTION("parse composed with render is the identity") {
        ParsedUpdate u = parse_update(
            "REMOVE: (gary, person_in_room, jessica_bedroom)\n"
            "ADD: (gary, person_in_room, alexander_bedroom), (light, light_on, true)");
        ParsedUpdate u2 = parse_update(u.render());
        CHECK(u2.removals == u.removals);
        CHECK(u2.additions == u.additions);
    }
}

TEST_CASE("goal block extraction") {
    auto domain = demo_domain();

    SECTION("forall goal from a bare block") {
        std::string block = extract_goal_block(
            "(:goal (and (forall (?a - light) (not (light_on ?a))) "
            "(forall (?b - sink) (not (faucet_on ?b)))))");
        GoalFormula g = parse_goal_formula(block, *domain);
        REQUIRE(g.kind == GoalFormula::Kind::And);
        REQUIRE(g.children.size() == 2);
        CHECK(g.children[0].kind == GoalFormula::Kind::Forall);
    }

    SECTION("empty conjunction") {
        GoalFormula g = parse_goal_formula(extract_goal_block("(:goal (and))"), *domain);
        CHECK(g.kind == GoalFormula::Kind::And);
        CHECK(g.children.empty());
    }

    SECTION("prose around the block is tolerated") {
        std::string completion =
            "Sure! Here is the goal you asked for:\n(:goal (and (light_on kitchen_light)))\n"
            "Let me know if you need anything else.";
        CHECK(extract_goal_block(completion) == "(:goal (and (light_on kitchen_light)))");
    }

    SECTION("missing block is an error") {
        CHECK_THROWS_AS(extract_goal_block("no goal here"), OutputParseError);
        CHECK_THROWS_AS(extract_goal_block("(:goal (and (p"), OutputParseError);
    }
}

TEST_CASE("oracle backend replays staged and playbook answers") {
    auto oracle = std::make_shared<OracleBackend>();
    LmGateway gw(oracle);

    OracleAnswers gary;
    gary.update =
        "REMOVE: (red_pen, in_person_hand, gary), (gary, person_in_room, jessica_bedroom)\n"
        "ADD: (gary, person_in_room, alexander_bedroom), "
        "(red_pen, placed_at_table, alexander_bedroom_table)";
    oracle->add_playbook_entry("Gary went to Alexander's bedroom", gary);

    PromptBundle p = gw.make_prompt(
        "update", {{"entities", "..."},
                   {"context", "..."},
                   {"update", "Gary went to Alexander's bedroom and placed the red pen on the table."},
                   {"errors", ""}});
    ParsedUpdate u = parse_update(gw.complete(p));
    CHECK(u.removals.size() == 2);
    CHECK(u.additions.size() == 2);
    CHECK(u.additions[0] == RawTriplet{"gary", "person_in_room", "alexander_bedroom"});

    SECTION("identical runs yield identical transcripts") {
        LmGateway gw2(oracle);
        std::string first = gw2.complete(p);
        std::string second = gw2.complete(p);
        CHECK(first == second);
    }

    SECTION("missing staged answer is an error") {
        PromptBundle q = gw.make_prompt("goal", {{"domain", "d"},
                                                 {"entities", "e"},
                                                 {"context", "c"},
                                                 {"task", "unknown task"}});
        CHECK_THROWS_AS(gw.complete(q), LmError);
    }
}

TEST_CASE("faulty backend corrupts update answers deterministically") {
    WorldGraph world = demo_world();
    auto oracle = std::make_shared<OracleBackend>();
    OracleAnswers a;
    a.update = demo_update_text();
    oracle->stage(a);

    auto make_prompt = [](int attempt) {
        PromptBundle p;
        p.template_id = "update";
        p.sections = {{"update", "Gary moved."}};
        p.rendered = "...";
        p.attempt = attempt;
        return p;
    };

    SECTION("drop_removal yields a well-typed but absent removal") {
        FaultProfile profile{1.0, 0.0, {FaultKind::DropRemoval}};
        FaultyBackend fb(oracle, profile, 7, [&] { return &world; });
        fb.set_event_key(3);
        ParsedUpdate u = parse_update(fb.complete(make_prompt(1)).text);
        REQUIRE(fb.last_injected() == FaultKind::DropRemoval);
        bool some_absent = false;
        for (const auto& t : u.removals)
            if (!world.triplets().count(t.to_triplet())) some_absent = true;
        CHECK(some_absent);
    }

    SECTION("wrong_predicate produces an unknown predicate, still parseable") {
        FaultProfile profile{1.0, 0.0, {FaultKind::WrongPredicate}};
        FaultyBackend fb(oracle, profile, 7, [&] { return &world; });
        fb.set_event_key(3);
        ParsedUpdate u = parse_update(fb.complete(make_prompt(1)).text);
        REQUIRE(fb.last_injected() == FaultKind::WrongPredicate);
        bool some_unknown = false;
        for (const auto& list : {u.removals, u.additions})
            for (const auto& t : list)
                if (!world.domain()->find_predicate(t.predicate)) some_unknown = true;
        CHECK(some_unknown);
    }

    SECTION("same seed and event key produce the same corruption") {
        FaultProfile profile{1.0, 0.0};
        FaultyBackend fb1(oracle, profile, 11, [&] { return &world; });
        FaultyBackend fb2(oracle, profile, 11, [&] { return &world; });
        fb1.set_event_key(42);
        fb2.set_event_key(42);
        CHECK(fb1.complete(make_prompt(1)).text == fb2.complete(make_prompt(1)).text);
        CHECK(fb1.last_injected() == fb2.last_injected());
    }

    SECTION("retry attempts pass through clean when retry_rate is 0") {
        FaultProfile profile{1.0, 0.0};
        FaultyBackend fb(oracle, profile, 11, [&] { return &world; });
        fb.set_event_key(42);
        std::string corrupted = fb.complete(make_prompt(1)).text;
        std::string clean = fb.complete(make_prompt(2)).text;
        CHECK(corrupted != a.update);
        CHECK(clean == a.update);
    }
}
