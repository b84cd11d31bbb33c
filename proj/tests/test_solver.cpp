#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <random>
#include <set>

#include "fmkit/cnf.hpp"
#include "fmkit/solver.hpp"
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

/// Satisfying assignments of a formula counted directly over its feature
/// variables, independent of the CNF pipeline.
std::uint64_t direct_formula_count(const Formula& f, std::size_t num_features) {
    std::uint64_t models = 0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << num_features); ++mask)
        if (support::formula_holds(f, mask_to_selection(mask, num_features)))
            ++models;
    return models;
}

} // namespace

TEST_CASE("literal encoding round trips") {
    Lit p = Lit::positive(4);
    Lit n = Lit::negative(4);
    CHECK(p.var() == 4);
    CHECK_FALSE(p.negated());
    CHECK(n.negated());
    CHECK(~p == n);
    CHECK(~n == p);
    CHECK(p.to_dimacs() == 5);
    CHECK(n.to_dimacs() == -5);
    CHECK(Lit::from_dimacs(5) == p);
    CHECK(Lit::from_dimacs(-5) == n);
}

TEST_CASE("tree semantics compile without auxiliary variables") {
    CnfFormula cnf = compile(semantics(support::make_e1()), 5);
    CHECK(cnf.num_features == 5);
    CHECK(cnf.num_vars == 5);
}

TEST_CASE("compiled fixtures keep their models") {
    CnfFormula e1 = compile(semantics(support::make_e1()), 5);
    CHECK(support::tt_projected_count(e1) == 3);
    CHECK(sat(e1).status == SolveStatus::Satisfiable);

    CnfFormula e2 = compile(semantics(support::make_e2()), 3);
    CHECK(support::tt_satisfiable(e2) == false);
    CHECK(sat(e2).status == SolveStatus::Unsatisfiable);
}

TEST_CASE("tseitin compilation preserves projected models on random formulas") {
    std::mt19937_64 rng(101);
    for (int i = 0; i < 150; ++i) {
        std::size_t num_vars = 2 + static_cast<std::size_t>(support::draw(rng, 5));
        Formula f = support::random_formula(rng, num_vars, 1 + support::draw(rng, 3));
        CnfFormula cnf = compile(f, num_vars);
        REQUIRE(support::tt_projected_count(cnf) ==
                BigCount(direct_formula_count(f, num_vars)));
    }
}

TEST_CASE("solver agrees with the truth table on random formulas") {
    std::mt19937_64 rng(202);
    for (int i = 0; i < 150; ++i) {
        std::size_t num_vars = 2 + static_cast<std::size_t>(support::draw(rng, 5));
        Formula f = support::random_formula(rng, num_vars, 1 + support::draw(rng, 3));
        CnfFormula cnf = compile(f, num_vars);
        SolveOutcome outcome = sat(cnf);
        REQUIRE((outcome.status == SolveStatus::Satisfiable) == support::tt_satisfiable(cnf));
        if (outcome.status == SolveStatus::Satisfiable) {
            REQUIRE(outcome.witness.size() == cnf.num_vars);
            REQUIRE(satisfies(cnf, outcome.witness));
        }
    }
}

TEST_CASE("assumptions restrict the search") {
    FeatureModel fm = support::make_e1();
    CnfFormula cnf = compile(semantics(fm), 5);
    std::uint32_t gps = fm.find_feature("GPS")->value;
    std::uint32_t gas = fm.find_feature("Gas")->value;
    std::uint32_t electric = fm.find_feature("Electric")->value;

    SolveOutcome with_gps = sat(cnf, {Lit::positive(gps)});
    REQUIRE(with_gps.status == SolveStatus::Satisfiable);
    CHECK(with_gps.witness[electric]);

    CHECK(sat(cnf, {Lit::positive(gps), Lit::positive(gas)}).status ==
          SolveStatus::Unsatisfiable);
    CHECK(sat(cnf, {Lit::positive(gps), Lit::negative(gps)}).status ==
          SolveStatus::Unsatisfiable);
    CHECK_THROWS_AS(sat(cnf, {Lit::positive(99)}), std::invalid_argument);
}

TEST_CASE("satisfies checks clause by clause") {
    CnfFormula cnf;
    cnf.num_vars = 2;
    cnf.num_features = 2;
    cnf.clauses = {{Lit::positive(0)}, {Lit::negative(0), Lit::positive(1)}};
    CHECK(satisfies(cnf, {true, true}));
    CHECK_FALSE(satisfies(cnf, {true, false}));
    CHECK_FALSE(satisfies(cnf, {false, true}));
}

TEST_CASE("model counting is exact on fixtures") {
    auto count_of = [](const FeatureModel& fm) {
        return count_models(compile(semantics(fm), fm.feature_count()));
    };
    CountResult e0 = count_of(support::make_e0());
    CHECK(e0.status == CountStatus::Exact);
    CHECK(e0.count == 1);
    CHECK(count_of(support::make_e1()).count == 3);
    CHECK(count_of(support::make_e2()).count == 0);
    CHECK(count_of(support::make_e4()).count == 3);
}

TEST_CASE("model counting matches the truth table on random formulas") {
    std::mt19937_64 rng(303);
    for (int i = 0; i < 150; ++i) {
        std::size_t num_vars = 2 + static_cast<std::size_t>(support::draw(rng, 5));
        Formula f = support::random_formula(rng, num_vars, 1 + support::draw(rng, 3));
        CnfFormula cnf = compile(f, num_vars);
        CountResult result = count_models(cnf);
        REQUIRE(result.status == CountStatus::Exact);
        REQUIRE(result.count == support::tt_projected_count(cnf));
    }
}

TEST_CASE("count budget exhaustion is reported, never a wrong number") {
    CnfFormula cnf = compile(semantics(support::make_e1()), 5);
    CountResult result = count_models(cnf, 1);
    CHECK(result.status == CountStatus::BudgetExhausted);
}

TEST_CASE("dimacs serialization round trips") {
    CnfFormula cnf = compile(semantics(support::make_e1()), 5);
    std::string text = to_dimacs(cnf);
    CHECK_THAT(text, Catch::Matchers::StartsWith("p cnf 5 "));
    CnfFormula back = parse_dimacs(text);
    CHECK(back.num_vars == cnf.num_vars);
    REQUIRE(back.clauses.size() == cnf.clauses.size());
    for (std::size_t i = 0; i < cnf.clauses.size(); ++i)
        CHECK(back.clauses[i] == cnf.clauses[i]);
}

TEST_CASE("dimacs parsing rejects malformed input") {
    CHECK_THROWS_AS(parse_dimacs("1 2 0\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_dimacs("p cnf x 2\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_dimacs("p cnf 2 1\n3 0\n"), std::runtime_error);
    CHECK_THROWS_AS(parse_dimacs("p cnf 2 2\n1 0\n"), std::runtime_error);
    CHECK_NOTHROW(parse_dimacs("c comment\np cnf 2 1\nc another\n1 -2 0\n"));
}

TEST_CASE("external solver hook") {
    const std::string solver = FMKIT_SAT_PATH;
    CnfFormula e1 = compile(semantics(support::make_e1()), 5);
    CnfFormula e2 = compile(semantics(support::make_e2()), 3);

    SECTION("satisfiable with verified witness") {
        SolveOutcome outcome = external_solver_hook(e1, solver);
        REQUIRE(outcome.status == SolveStatus::Satisfiable);
        CHECK(satisfies(e1, outcome.witness));
    }
    SECTION("unsatisfiable") {
        CHECK(external_solver_hook(e2, solver).status == SolveStatus::Unsatisfiable);
    }
    SECTION("malformed solver output is rejected") {
        CHECK_THROWS_AS(external_solver_hook(e1, solver + " --garble"), solver_error);
    }
    SECTION("unconfigured hook names the environment variable") {
        unsetenv("FMKIT_EXTERNAL_SOLVER");
        try {
            external_solver_hook(e1);
            FAIL("expected solver_error");
        } catch (const solver_error& e) {
            CHECK_THAT(e.what(),
                       Catch::Matchers::ContainsSubstring("FMKIT_EXTERNAL_SOLVER"));
        }
    }
    SECTION("environment variable supplies the command") {
        setenv("FMKIT_EXTERNAL_SOLVER", solver.c_str(), 1);
        CHECK(external_solver_hook(e2).status == SolveStatus::Unsatisfiable);
        unsetenv("FMKIT_EXTERNAL_SOLVER");
    }
}
