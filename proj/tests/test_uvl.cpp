#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fmkit/blueprint.hpp"
#include "fmkit/uvl.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace fmkit;

TEST_CASE("parsing minimal uvl yields the e1 model") {
    UvlDocument doc = parse_uvl(support::e1_uvl_text());
    CHECK(doc.warnings.empty());
    CHECK(support::models_equivalent(doc.model, support::make_e1()));
}

TEST_CASE("indentation rules") {
    SECTION("two-space units work like tabs") {
        std::string text = "features\n"
                           "  A\n"
                           "    optional\n"
                           "      B\n";
        UvlDocument doc = parse_uvl(text);
        CHECK(doc.model.feature_count() == 2);
        REQUIRE(doc.model.relationships.size() == 1);
        CHECK(doc.model.relationships[0].kind == RelKind::Optional);
    }
    SECTION("mixed tabs and spaces on one line fail") {
        CHECK_THROWS_AS(parse_uvl("features\n\tA\n\t  optional\n\t\t\tB\n"), parse_error);
    }
    SECTION("indentation must be a whole number of units") {
        CHECK_THROWS_AS(parse_uvl("features\n  A\n   optional\n"), parse_error);
    }
    SECTION("levels may not jump by more than one") {
        CHECK_THROWS_AS(parse_uvl("features\n\tA\n\t\t\toptional\n"), parse_error);
    }
    SECTION("the first line must start at the margin") {
        CHECK_THROWS_AS(parse_uvl("\tfeatures\n"), parse_error);
    }
}

TEST_CASE("group structure") {
    SECTION("group headers are case-insensitive") {
        std::string text = "features\n"
                           "\tA\n"
                           "\t\tMandatory\n"
                           "\t\t\tB\n"
                           "\t\tOPTIONAL\n"
                           "\t\t\tC\n";
        UvlDocument doc = parse_uvl(text);
        REQUIRE(doc.model.relationships.size() == 2);
        CHECK(doc.model.relationships[0].kind == RelKind::Mandatory);
        CHECK(doc.model.relationships[1].kind == RelKind::Optional);
    }
    SECTION("or and alternative groups need at least two members") {
        CHECK_THROWS_AS(parse_uvl("features\n\tA\n\t\tor\n\t\t\tB\n"), parse_error);
        CHECK_THROWS_AS(parse_uvl("features\n\tA\n\t\talternative\n\t\t\tB\n"), parse_error);
    }
    SECTION("empty groups fail") {
        CHECK_THROWS_AS(parse_uvl("features\n\tA\n\t\tmandatory\n"), parse_error);
    }
    SECTION("mandatory and optional emit one relationship per child") {
        std::string text = "features\n"
                           "\tA\n"
                           "\t\tmandatory\n"
                           "\t\t\tB\n"
                           "\t\t\tC\n";
        UvlDocument doc = parse_uvl(text);
        REQUIRE(doc.model.relationships.size() == 2);
        CHECK(doc.model.relationships[0].children.size() == 1);
        CHECK(doc.model.relationships[1].children.size() == 1);
    }
    SECTION("more than one root fails") {
        CHECK_THROWS_AS(parse_uvl("features\n\tA\n\tB\n"), parse_error);
    }
}

TEST_CASE("names and attributes") {
    SECTION("quoted names may contain keywords and spaces") {
        std::string text = "features\n"
                           "\t\"Media Center\"\n"
                           "\t\toptional\n"
                           "\t\t\t\"or\"\n";
        UvlDocument doc = parse_uvl(text);
        CHECK(doc.model.find_feature("Media Center").has_value());
        CHECK(doc.model.find_feature("or").has_value());
    }
    SECTION("attribute blocks are discarded with a warning") {
        std::string text = "features\n"
                           "\tA {cost 5, vendor \"x\"}\n"
                           "\t\toptional\n"
                           "\t\t\tB\n";
        UvlDocument doc = parse_uvl(text);
        REQUIRE(doc.warnings.size() == 1);
        CHECK_THAT(doc.warnings[0], Catch::Matchers::ContainsSubstring("line 2"));
        CHECK_THAT(doc.warnings[0], Catch::Matchers::ContainsSubstring("A"));
        CHECK(doc.model.feature_count() == 2);
    }
    SECTION("unterminated attribute block fails") {
        CHECK_THROWS_AS(parse_uvl("features\n\tA {cost 5\n"), parse_error);
    }
    SECTION("abstract marker maps to an ordinary feature") {
        UvlDocument doc = parse_uvl("features\n\tabstract A\n\t\toptional\n\t\t\tB\n");
        CHECK(doc.model.find_feature("A").has_value());
    }
    SECTION("comments are stripped outside quotes") {
        UvlDocument doc = parse_uvl("features // tree\n\tA // root\n");
        CHECK(doc.model.feature_count() == 1);
    }
}

TEST_CASE("unsupported constructs fail with the construct named") {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        try {
            parse_uvl(text);
            FAIL("expected parse_error for: " << needle);
        } catch (const parse_error& e) {
            CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring(needle));
        }
    };
    expect_error("features\n\tA\n\t\t[1..2]\n\t\t\tB\n\t\t\tC\n", "cardinality");
    expect_error("features\n\tA cardinality [1..2]\n", "cardinality");
    expect_error("features\n\tA\n\t\toptional\n\t\t\tInteger B\n", "typed");
    expect_error("include\nfeatures\n\tA\n", "include");
    expect_error("imports\nfeatures\n\tA\n", "imports");
    expect_error("namespace n\nfeatures\n\tA\n", "namespace");
}

TEST_CASE("top-level structure errors") {
    CHECK_THROWS_AS(parse_uvl("constraints\n\tA => B\n"), parse_error);
    CHECK_THROWS_AS(parse_uvl("features\n\tA\nfeatures\n\tB\n"), parse_error);
    CHECK_THROWS_AS(parse_uvl("blueprint\n\tA\n"), parse_error);
}

TEST_CASE("constraint parsing") {
    SECTION("unknown feature in a constraint") {
        try {
            parse_uvl("features\n\tA\n\nconstraints\n\tA => Ghost\n");
            FAIL("expected parse_error");
        } catch (const parse_error& e) {
            CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("Ghost"));
        }
    }
    SECTION("top-level iff becomes two implications") {
        UvlDocument doc = parse_uvl(
            "features\n\tA\n\t\toptional\n\t\t\tB\n\nconstraints\n\tA <=> B\n");
        REQUIRE(doc.model.constraints.size() == 2);
        CHECK(doc.model.constraints[0].kind() == Formula::Kind::Implies);
        CHECK(doc.model.constraints[1].kind() == Formula::Kind::Implies);
    }
    SECTION("nested iff becomes a conjunction of implications") {
        UvlDocument doc = parse_uvl("features\n\tA\n\t\toptional\n\t\t\tB\n\t\toptional\n\t\t"
                                    "\tC\n\nconstraints\n\tA => (B <=> C)\n");
        REQUIRE(doc.model.constraints.size() == 1);
        const Formula& f = doc.model.constraints[0];
        REQUIRE(f.kind() == Formula::Kind::Implies);
        CHECK(f.operands()[1].kind() == Formula::Kind::And);
    }
    SECTION("tree violations surface as parse errors") {
        CHECK_THROWS_AS(
            parse_uvl("features\n\tA\n\t\tmandatory\n\t\t\tB\n\t\t\tB\n"), parse_error);
    }
}

TEST_CASE("rendered uvl is canonical") {
    CHECK(render_uvl(support::make_e0()) == "features\n\tA\n");
    CHECK_THAT(render_uvl(support::make_e2()), Catch::Matchers::ContainsSubstring("!(B & C)"));
    std::string e1 = render_uvl(support::make_e1());
    CHECK_THAT(e1, Catch::Matchers::ContainsSubstring("constraints\n\tGPS => Electric\n"));
    CHECK(support::models_equivalent(parse_uvl(e1).model, support::make_e1()));
}

TEST_CASE("uvl round trip holds on random models") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        FeatureModel fm = support::random_model(rng);
        FeatureModel back = parse_uvl(render_uvl(fm)).model;
        REQUIRE(support::models_equivalent(fm, back));
    }
}

TEST_CASE("cross-format conversion preserves the model") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 25; ++i) {
        FeatureModel fm = support::random_model(rng);
        FeatureModel via_uvl = parse_uvl(render_uvl(fm)).model;
        FeatureModel via_bp = resolve(parse_blueprint(render_blueprint(via_uvl)));
        REQUIRE(support::models_equivalent(fm, via_bp));
    }
}
