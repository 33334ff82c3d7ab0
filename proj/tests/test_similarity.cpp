#include <catch2/catch_amalgamated.hpp>

#include "kgplan/demo_world.hpp"
#include "kgplan/similarity.hpp"
#include "kgplan/util.hpp"

using namespace kgplan;
using Catch::Approx;

namespace {

const LexicalSimilarity lex;

double lexical(const std::string& a, const std::string& b) {
    // undo the [0,1] rescaling to compare against hand-computed 0.5*J + 0.4*cos
    return lex.score(a, b) * 0.9;
}

}  // namespace

TEST_CASE("lexical similarity matches hand-computed values") {
    // frozen from the formula: 0.5 * token-set Jaccard + 0.4 * trigram cosine
    CHECK(lexical("pen", "red_pen") == Approx(0.428885438).epsilon(1e-9));
    CHECK(lexical("pen", "kitchen_table") == Approx(0.0).margin(1e-12));
    CHECK(lexical("mug", "bowl") == Approx(0.0).margin(1e-12));
    CHECK(lexical("red pen", "red_pen") == Approx(0.9).epsilon(1e-12));
    CHECK(lexical("mug", "blue_mug") == Approx(0.413299316).epsilon(1e-9));
    CHECK(lexical("shelf", "jerry_bedroom_shelf") == Approx(0.334700277).epsilon(1e-9));
    CHECK(lexical("jerry's bedroom", "jerry_bedroom") == Approx(0.701279818).epsilon(1e-9));
    CHECK(lexical("level 3", "shelf_level_3") == Approx(0.603013278).epsilon(1e-9));
    CHECK(lexical("level 3", "shelf_level_5") == Approx(0.340743956).epsilon(1e-9));
}

TEST_CASE("scorer examples from the demo world") {
    WorldGraph g = demo_world();
    SimilarityScorer scorer;
    const Domain* d = g.domain().get();

    SECTION("exact normalized-name match with attributes scores 1.0") {
        QueryEntity q{"red pen", {}, ""};
        CHECK(scorer.score(q, *g.find_entity("red_pen"), d) == Approx(1.0).epsilon(1e-12));
    }

    SECTION("identical name and matching type hint scores 1.0") {
        QueryEntity q{"blue_mug", {}, "dish"};
        CHECK(scorer.score(q, *g.find_entity("blue_mug"), d) == Approx(1.0).epsilon(1e-12));
    }

    SECTION("mismatching type hint caps the score below 1") {
        QueryEntity q{"blue_mug", {}, "room"};
        CHECK(scorer.score(q, *g.find_entity("blue_mug"), d) == Approx(0.9).epsilon(1e-12));
    }

    SECTION("pen scores higher against red_pen than kitchen_table") {
        QueryEntity q{"pen", {}, ""};
        double s_pen = scorer.score(q, *g.find_entity("red_pen"), d);
        double s_table = scorer.score(q, *g.find_entity("kitchen_table"), d);
        CHECK(s_pen > s_table);
        CHECK(s_pen == Approx(0.428885438 + 0.1).epsilon(1e-9));
    }

    SECTION("mug stays below the cutoff fraction of its best column for bowl") {
        QueryEntity q{"mug", {}, ""};
        double best = 0.0;
        for (const auto& [name, e] : g.entities())
            best = std::max(best, scorer.score(q, e, d));
        double s_bowl = scorer.score(q, *g.find_entity("white_bowl"), d);
        CHECK(best == scorer.score(q, *g.find_entity("blue_mug"), d));
        CHECK(s_bowl < 0.8 * best);
    }

    SECTION("attributes break ties between equally named entities") {
        QueryEntity q{"pen", {{"color", "red"}}, ""};
        double s_red = scorer.score(q, *g.find_entity("red_pen"), d);
        double s_blue = scorer.score(q, *g.find_entity("blue_pen"), d);
        CHECK(s_red > s_blue);
    }
}

TEST_CASE("matrix has query-by-entity shape with finite entries") {
    WorldGraph g = demo_world();
    SimilarityScorer scorer;
    std::vector<QueryEntity> q = {{"red pen", {}, ""}, {"shelf", {}, ""}, {"", {}, ""}};
    SimilarityMatrix m = scorer.matrix(q, g);
    REQUIRE(m.values.size() == 3);
    REQUIRE(m.entities.size() == g.entities().size());
    for (const auto& row : m.values) {
        REQUIRE(row.size() == m.entities.size());
        for (double v : row) {
            CHECK(std::isfinite(v));
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("provider properties") {
    Rng rng(424242);
    const std::vector<std::string> words = {"red",  "blue", "pen",   "mug",  "shelf",
                                            "room", "bed",  "table", "lamp", "tv"};
    auto random_phrase = [&](int max_words) {
        int n = rng.range(1, max_words);
        std::vector<std::string> ws;
        for (int i = 0; i < n; ++i) ws.push_back(rng.pick(words));
        return join(ws, " ");
    };

    SECTION("symmetric under argument swap") {
        for (int i = 0; i < 200; ++i) {
            std::string a = random_phrase(4);
            std::string b = random_phrase(4);
            CHECK(lex.score(a, b) == Approx(lex.score(b, a)).epsilon(1e-12));
        }
    }

    SECTION("invariant to case and -/_ differences") {
        CHECK(lex.score("Red-Pen", "red_pen") == Approx(1.0).epsilon(1e-12));
        CHECK(lex.score("LIVING ROOM", "living-room") == Approx(1.0).epsilon(1e-12));
        for (int i = 0; i < 100; ++i) {
            std::string a = random_phrase(3);
            std::string mangled;
            for (char c : a) {
                if (c == ' ')
                    mangled.push_back(rng.chance(0.5) ? '-' : '_');
                else
                    mangled.push_back(rng.chance(0.5)
                                          ? static_cast<char>(std::toupper(c))
                                          : c);
            }
            CHECK(lex.score(a, mangled) == Approx(1.0).epsilon(1e-12));
        }
    }

    SECTION("1.0 exactly when token multisets are equal") {
        for (int i = 0; i < 300; ++i) {
            std::string a = random_phrase(4);
            auto toks = LexicalSimilarity::tokens(a);
            if (rng.chance(0.5)) {
                // permutation: equal multisets
                for (size_t j = toks.size(); j > 1; --j)
                    std::swap(toks[j - 1], toks[rng.below(j)]);
                std::string b = join(toks, " ");
                CHECK(lex.score(a, b) == Approx(1.0).epsilon(1e-12));
            } else {
                // perturb the multiset: drop or duplicate a token
                if (rng.chance(0.5) && toks.size() > 1)
                    toks.pop_back();
                else
                    toks.push_back(toks.back());
                std::string b = join(toks, " ");
                bool equal_multisets = LexicalSimilarity::tokens(a) == LexicalSimilarity::tokens(b);
                if (!equal_multisets) CHECK(lex.score(a, b) < 1.0 - 1e-12);
            }
        }
    }
}
