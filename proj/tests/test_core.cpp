#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "fmkit/core.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace fmkit;

namespace {

std::set<FeatureId> mask_to_selection(std::uint64_t mask, std::size_t n) {
    std::set<FeatureId> out;
    for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1u)
            out.insert(FeatureId{static_cast<std::uint32_t>(i)});
    return out;
}

std::vector<bool> mask_to_assignment(std::uint64_t mask, std::size_t n) {
    std::vector<bool> out(n, false);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = (mask >> i) & 1u;
    return out;
}

} // namespace

TEST_CASE("feature name validity") {
    CHECK(valid_feature_name("Car"));
    CHECK(valid_feature_name("Anti Lock Brakes"));
    CHECK(valid_feature_name("GPS_v2-beta"));
    CHECK_FALSE(valid_feature_name(""));
    CHECK_FALSE(valid_feature_name(" Car"));
    CHECK_FALSE(valid_feature_name("Car "));
    CHECK_FALSE(valid_feature_name("Car!"));
    CHECK_FALSE(valid_feature_name("a\tb"));
}

TEST_CASE("builder rejects duplicate and invalid names") {
    FeatureModelBuilder b;
    b.add_feature("A");
    CHECK_THROWS_AS(b.add_feature("A"), model_error);
    CHECK_THROWS_AS(b.add_feature("bad name!"), model_error);
    CHECK(b.find("A").has_value());
    CHECK_FALSE(b.find("B").has_value());
    CHECK(b.find_or_add("A") == *b.find("A"));
}

TEST_CASE("validation accepts the fixtures") {
    CHECK(validate_model(support::make_e0()).empty());
    CHECK(validate_model(support::make_e1()).empty());
    CHECK(validate_model(support::make_e2()).empty());
    CHECK(validate_model(support::make_e3()).empty());
    CHECK(validate_model(support::make_e4()).empty());
}

TEST_CASE("validation reports structural defects") {
    SECTION("unattached feature") {
        FeatureModel fm = support::make_e1();
        fm.features.push_back({FeatureId{5}, "Orphan"});
        auto v = validate_model(fm);
        REQUIRE_FALSE(v.empty());
        CHECK_THAT(v.front().message, Catch::Matchers::ContainsSubstring("Orphan"));
    }
    SECTION("multiple parents") {
        FeatureModel fm = support::make_e1();
        fm.relationships.push_back(
            {FeatureId{1}, RelKind::Optional, {FeatureId{2}}});
        auto v = validate_model(fm);
        REQUIRE_FALSE(v.empty());
        CHECK_THAT(v.front().message, Catch::Matchers::ContainsSubstring("multiple parents"));
    }
    SECTION("root as a child") {
        FeatureModel fm = support::make_e4();
        fm.relationships.push_back({FeatureId{1}, RelKind::Optional, {fm.root}});
        CHECK_FALSE(validate_model(fm).empty());
    }
    SECTION("relationship arity") {
        FeatureModel fm = support::make_e0();
        fm.features.push_back({FeatureId{1}, "B"});
        fm.features.push_back({FeatureId{2}, "C"});
        fm.relationships.push_back(
            {fm.root, RelKind::Mandatory, {FeatureId{1}, FeatureId{2}}});
        CHECK_FALSE(validate_model(fm).empty());

        FeatureModel fm2 = support::make_e0();
        fm2.features.push_back({FeatureId{1}, "B"});
        fm2.relationships.push_back({fm2.root, RelKind::Or, {FeatureId{1}}});
        CHECK_FALSE(validate_model(fm2).empty());
    }
    SECTION("self child and duplicate child") {
        FeatureModel fm = support::make_e0();
        fm.features.push_back({FeatureId{1}, "B"});
        fm.relationships.push_back({FeatureId{1}, RelKind::Optional, {FeatureId{1}}});
        CHECK_FALSE(validate_model(fm).empty());

        FeatureModel fm2 = support::make_e0();
        fm2.features.push_back({FeatureId{1}, "B"});
        fm2.relationships.push_back(
            {fm2.root, RelKind::Or, {FeatureId{1}, FeatureId{1}}});
        CHECK_FALSE(validate_model(fm2).empty());
    }
    SECTION("constraint over unknown feature") {
        FeatureModel fm = support::make_e0();
        fm.constraints.push_back(Formula::var(FeatureId{7}));
        auto v = validate_model(fm);
        REQUIRE_FALSE(v.empty());
        CHECK_THAT(v.front().message, Catch::Matchers::ContainsSubstring("constraint"));
    }
    SECTION("require_valid throws with the first violation") {
        FeatureModel fm = support::make_e1();
        fm.features.push_back({FeatureId{5}, "Orphan"});
        CHECK_THROWS_AS(require_valid(fm), model_error);
    }
}

TEST_CASE("formula factories enforce arity") {
    Formula a = Formula::var(FeatureId{0});
    Formula b = Formula::var(FeatureId{1});
    CHECK_THROWS_AS(Formula::conjunction({}), std::invalid_argument);
    CHECK_THROWS_AS(Formula::conjunction({a}), std::invalid_argument);
    CHECK_THROWS_AS(Formula::disjunction({b}), std::invalid_argument);
    CHECK(Formula::conjunction({a, b}).operands().size() == 2);
    CHECK(Formula::implication(a, b).kind() == Formula::Kind::Implies);
    CHECK(Formula::negation(a).kind() == Formula::Kind::Not);
}

TEST_CASE("formula equality and variable traversal") {
    Formula a = Formula::var(FeatureId{0});
    Formula b = Formula::var(FeatureId{1});
    Formula f = Formula::implication(a, Formula::negation(b));
    Formula g = Formula::implication(a, Formula::negation(b));
    CHECK(f == g);
    CHECK_FALSE(f == Formula::implication(b, Formula::negation(a)));

    std::set<std::uint32_t> seen;
    f.for_each_var([&](FeatureId id) { seen.insert(id.value); });
    CHECK(seen == std::set<std::uint32_t>{0, 1});

    Formula shifted = f.remap_vars([](FeatureId id) { return FeatureId{id.value + 3}; });
    seen.clear();
    shifted.for_each_var([&](FeatureId id) { seen.insert(id.value); });
    CHECK(seen == std::set<std::uint32_t>{3, 4});
}

TEST_CASE("semantics agrees with the rule-by-rule oracle on fixtures") {
    for (const FeatureModel& fm : {support::make_e0(), support::make_e1(), support::make_e2(),
                                   support::make_e3(), support::make_e4()}) {
        Formula sem = semantics(fm);
        std::size_t n = fm.feature_count();
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            bool via_formula = eval_formula(sem, mask_to_assignment(mask, n));
            bool via_rules = support::selection_valid(fm, mask_to_selection(mask, n));
            REQUIRE(via_formula == via_rules);
        }
    }
}

TEST_CASE("semantics agrees with the rule-by-rule oracle on random models") {
    std::mt19937_64 rng(20260822);
    for (int i = 0; i < 60; ++i) {
        FeatureModel fm = support::random_model(rng);
        REQUIRE(validate_model(fm).empty());
        Formula sem = semantics(fm);
        std::size_t n = fm.feature_count();
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            bool via_formula = eval_formula(sem, mask_to_assignment(mask, n));
            bool via_rules = support::selection_valid(fm, mask_to_selection(mask, n));
            REQUIRE(via_formula == via_rules);
        }
    }
}

TEST_CASE("enumeration pins the e1 configurations in ascending bit order") {
    FeatureModel fm = support::make_e1();
    auto configs = enumerate_configurations(fm, 100);
    REQUIRE(configs.size() == 3);
    auto names = [&](const Configuration& cfg) {
        std::set<std::string> out;
        for (FeatureId id : cfg.selected)
            out.insert(fm.feature_name(id));
        return out;
    };
    CHECK(names(configs[0]) == std::set<std::string>{"Car", "Engine", "Gas"});
    CHECK(names(configs[1]) == std::set<std::string>{"Car", "Engine", "Electric"});
    CHECK(names(configs[2]) == std::set<std::string>{"Car", "Engine", "Electric", "GPS"});
    for (const Configuration& cfg : configs) {
        CHECK(cfg.completeness == Completeness::Full);
        CHECK(cfg.selected.size() + cfg.deselected.size() == fm.feature_count());
    }
}

TEST_CASE("enumeration limit and guard behavior") {
    FeatureModel fm = support::make_e1();
    CHECK_THROWS_AS(enumerate_configurations(fm, 0), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_configurations(fm, 2), model_error);
    CHECK(enumerate_configurations(fm, 2, true).size() == 2);

    FeatureModelBuilder b;
    FeatureId root = b.add_feature("R");
    b.set_root(root);
    for (int i = 0; i < 26; ++i)
        b.add_relationship(root, RelKind::Optional, {b.add_feature("F" + std::to_string(i))});
    FeatureModel big = b.build("big");
    big.root = root;
    CHECK_THROWS_AS(enumerate_configurations(big, 10, true), model_error);
}

TEST_CASE("configuration construction checks names, overlap, and coverage") {
    FeatureModel fm = support::make_e1();
    Configuration full = make_configuration(fm, {"Car", "Engine", "Electric", "GPS"}, {"Gas"},
                                            Completeness::Full);
    CHECK(full.selected.size() == 4);
    CHECK(full.deselected.size() == 1);

    CHECK_THROWS_AS(make_configuration(fm, {"Warp"}, {}, Completeness::Partial), model_error);
    CHECK_THROWS_AS(make_configuration(fm, {"Car"}, {"Car"}, Completeness::Partial),
                    model_error);
    CHECK_THROWS_AS(
        make_configuration(fm, {"Car", "Engine"}, {"Gas"}, Completeness::Full), model_error);
    CHECK_NOTHROW(make_configuration(fm, {"GPS"}, {}, Completeness::Partial));
}

TEST_CASE("requires and excludes constraint shapes") {
    Formula req = requires_constraint(FeatureId{0}, FeatureId{1});
    CHECK(req.kind() == Formula::Kind::Implies);
    CHECK(req.operands()[0].kind() == Formula::Kind::Var);

    Formula exc = excludes_constraint(FeatureId{0}, FeatureId{1});
    REQUIRE(exc.kind() == Formula::Kind::Not);
    CHECK(exc.operands().front().kind() == Formula::Kind::And);
    CHECK(exc.operands().front().operands().size() == 2);
}
