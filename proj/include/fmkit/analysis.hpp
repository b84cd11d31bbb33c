#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fmkit/cnf.hpp"
#include "fmkit/core.hpp"
#include "fmkit/solver.hpp"

namespace fmkit {

enum class AoKind {
    AO1,
    AO2,
    AO3,
    AO4,
    AO5,
    AO6,
    AO7,
    AO8,
    AO9,
    AO10,
    AO11,
    AO12,
    AO13,
    AO14,
    AO15,
    AO16
};

inline constexpr std::array<AoKind, 16> all_aos() {
    return {AoKind::AO1,  AoKind::AO2,  AoKind::AO3,  AoKind::AO4,
            AoKind::AO5,  AoKind::AO6,  AoKind::AO7,  AoKind::AO8,
            AoKind::AO9,  AoKind::AO10, AoKind::AO11, AoKind::AO12,
            AoKind::AO13, AoKind::AO14, AoKind::AO15, AoKind::AO16};
}

inline std::string to_string(AoKind kind) {
    return "AO" + std::to_string(static_cast<int>(kind) + 1);
}

inline std::optional<AoKind> ao_from_string(std::string_view code) {
    for (AoKind k : all_aos())
        if (to_string(k) == code)
            return k;
    return std::nullopt;
}

/// AO1-AO9 read the tree; AO10-AO16 need the solver.
inline bool is_solver_based(AoKind kind) {
    return static_cast<int>(kind) >= static_cast<int>(AoKind::AO10);
}

using FeatureSet = std::set<std::string>;

/// Result of one analysis operation. The variant alternative is fixed by the
/// kind: counts for AO1-AO9, booleans for AO10/AO11/AO16, a big count for
/// AO12, feature-name sets for AO13-AO15.
struct AoResult {
    AoKind kind = AoKind::AO1;
    std::variant<std::uint64_t, bool, BigCount, FeatureSet> value;
    /// AO13-AO15 on a void model answer by the literal definition; this flag
    /// marks that the answer is vacuous.
    bool void_model = false;
    /// AO12 only: the counting budget ran out and no number is claimed.
    bool not_computed = false;

    std::uint64_t count() const { return std::get<std::uint64_t>(value); }
    bool boolean() const { return std::get<bool>(value); }
    const BigCount& big_count() const { return std::get<BigCount>(value); }
    const FeatureSet& feature_set() const { return std::get<FeatureSet>(value); }

    /// Equality of the answer itself; the void flag is advisory and excluded.
    bool value_equals(const AoResult& other) const {
        return kind == other.kind && not_computed == other.not_computed &&
               value == other.value;
    }

    static AoResult of_count(AoKind k, std::uint64_t v) { return AoResult{k, v, false, false}; }
    static AoResult of_bool(AoKind k, bool v) { return AoResult{k, v, false, false}; }
    static AoResult of_big(AoKind k, BigCount v) {
        return AoResult{k, std::move(v), false, false};
    }
    static AoResult of_set(AoKind k, FeatureSet v) {
        return AoResult{k, std::move(v), false, false};
    }
};

/// Renders the answer the way reports print it: sets as comma-separated
/// sorted names, empty set as "{}".
inline std::string value_to_string(const AoResult& r) {
    if (r.not_computed)
        return "not computed";
    if (std::holds_alternative<std::uint64_t>(r.value))
        return std::to_string(std::get<std::uint64_t>(r.value));
    if (std::holds_alternative<bool>(r.value))
        return std::get<bool>(r.value) ? "true" : "false";
    if (std::holds_alternative<BigCount>(r.value))
        return std::get<BigCount>(r.value).str();
    const FeatureSet& set = std::get<FeatureSet>(r.value);
    if (set.empty())
        return "{}";
    std::string out;
    for (const std::string& name : set) {
        if (!out.empty())
            out += ", ";
        out += name;
    }
    return out;
}

inline AoResult ao1_features(const FeatureModel& fm) {
    require_valid(fm);
    return AoResult::of_count(AoKind::AO1, fm.feature_count());
}

inline AoResult ao2_leaf_features(const FeatureModel& fm) {
    require_valid(fm);
    std::set<FeatureId> parents;
    for (const Relationship& rel : fm.relationships)
        parents.insert(rel.parent);
    return AoResult::of_count(AoKind::AO2, fm.feature_count() - parents.size());
}

inline AoResult ao3_tree_depth(const FeatureModel& fm) {
    require_valid(fm);
    std::vector<std::uint64_t> depth(fm.feature_count(), 0);
    std::uint64_t deepest = 0;
    std::vector<FeatureId> stack{fm.root};
    while (!stack.empty()) {
        FeatureId cur = stack.back();
        stack.pop_back();
        for (const Relationship& rel : fm.relationships) {
            if (rel.parent != cur)
                continue;
            for (FeatureId child : rel.children) {
                depth[child.value] = depth[cur.value] + 1;
                deepest = std::max(deepest, depth[child.value]);
                stack.push_back(child);
            }
        }
    }
    return AoResult::of_count(AoKind::AO3, deepest);
}

inline AoResult ao4_mandatory(const FeatureModel& fm) {
    require_valid(fm);
    std::set<FeatureId> children;
    for (const Relationship& rel : fm.relationships)
        if (rel.kind == RelKind::Mandatory)
            children.insert(rel.children.front());
    return AoResult::of_count(AoKind::AO4, children.size());
}

inline AoResult ao5_optional(const FeatureModel& fm) {
    require_valid(fm);
    std::set<FeatureId> children;
    for (const Relationship& rel : fm.relationships)
        if (rel.kind == RelKind::Optional)
            children.insert(rel.children.front());
    return AoResult::of_count(AoKind::AO5, children.size());
}

inline AoResult ao6_or_groups(const FeatureModel& fm) {
    require_valid(fm);
    std::uint64_t n = 0;
    for (const Relationship& rel : fm.relationships)
        if (rel.kind == RelKind::Or)
            ++n;
    return AoResult::of_count(AoKind::AO6, n);
}

inline AoResult ao7_alt_groups(const FeatureModel& fm) {
    require_valid(fm);
    std::uint64_t n = 0;
    for (const Relationship& rel : fm.relationships)
        if (rel.kind == RelKind::Alternative)
            ++n;
    return AoResult::of_count(AoKind::AO7, n);
}

namespace detail {

inline bool is_requires_shape(const Formula& f) {
    return f.kind() == Formula::Kind::Implies &&
           f.operands()[0].kind() == Formula::Kind::Var &&
           f.operands()[1].kind() == Formula::Kind::Var;
}

inline bool is_excludes_shape(const Formula& f) {
    if (f.kind() == Formula::Kind::Not) {
        const Formula& inner = f.operands()[0];
        return inner.kind() == Formula::Kind::And && inner.operands().size() == 2 &&
               inner.operands()[0].kind() == Formula::Kind::Var &&
               inner.operands()[1].kind() == Formula::Kind::Var;
    }
    if (f.kind() == Formula::Kind::Implies) {
        const Formula& lhs = f.operands()[0];
        const Formula& rhs = f.operands()[1];
        return lhs.kind() == Formula::Kind::Var && rhs.kind() == Formula::Kind::Not &&
               rhs.operands()[0].kind() == Formula::Kind::Var;
    }
    return false;
}

} // namespace detail

/// Syntactic count: constraints of the exact shape a => b.
inline AoResult ao8_requires(const FeatureModel& fm) {
    require_valid(fm);
    std::uint64_t n = 0;
    for (const Formula& c : fm.constraints)
        if (detail::is_requires_shape(c))
            ++n;
    return AoResult::of_count(AoKind::AO8, n);
}

/// Syntactic count: constraints shaped !(a & b) or a => !b.
inline AoResult ao9_excludes(const FeatureModel& fm) {
    require_valid(fm);
    std::uint64_t n = 0;
    for (const Formula& c : fm.constraints)
        if (detail::is_excludes_shape(c))
            ++n;
    return AoResult::of_count(AoKind::AO9, n);
}

inline AoResult ao10_satisfiable(const FeatureModel& fm) {
    CnfFormula cnf = compile(semantics(fm), fm.feature_count());
    return AoResult::of_bool(AoKind::AO10, sat(cnf).status == SolveStatus::Satisfiable);
}

/// Full configurations are evaluated directly against the semantics; partial
/// configurations ask whether some completion is valid.
inline AoResult ao11_config_satisfiable(const FeatureModel& fm, const Configuration& config) {
    Formula sem = semantics(fm);
    for (FeatureId id : config.selected)
        if (!fm.valid_id(id))
            throw model_error("configuration feature id out of range");
    for (FeatureId id : config.deselected)
        if (!fm.valid_id(id))
            throw model_error("configuration feature id out of range");

    if (config.completeness == Completeness::Full) {
        if (config.selected.size() + config.deselected.size() != fm.feature_count())
            throw model_error("full configuration must cover every feature");
        std::vector<bool> assignment(fm.feature_count(), false);
        for (FeatureId id : config.selected)
            assignment[id.value] = true;
        return AoResult::of_bool(AoKind::AO11, eval_formula(sem, assignment));
    }

    CnfFormula cnf = compile(sem, fm.feature_count());
    std::vector<Lit> assumptions;
    for (FeatureId id : config.selected)
        assumptions.push_back(Lit::positive(id.value));
    for (FeatureId id : config.deselected)
        assumptions.push_back(Lit::negative(id.value));
    return AoResult::of_bool(AoKind::AO11,
                             sat(cnf, assumptions).status == SolveStatus::Satisfiable);
}

inline AoResult ao12_count_configurations(const FeatureModel& fm,
                                          std::uint64_t node_budget = kDefaultCountBudget) {
    CnfFormula cnf = compile(semantics(fm), fm.feature_count());
    CountResult r = count_models(cnf, node_budget);
    if (r.status == CountStatus::BudgetExhausted) {
        AoResult out = AoResult::of_big(AoKind::AO12, 0);
        out.not_computed = true;
        return out;
    }
    return AoResult::of_big(AoKind::AO12, std::move(r.count));
}

/// Features present in every valid configuration. On a void model every
/// feature qualifies vacuously; the result is flagged.
inline AoResult ao13_core_features(const FeatureModel& fm) {
    CnfFormula cnf = compile(semantics(fm), fm.feature_count());
    SatSolver solver(cnf);
    bool is_void = solver.solve().status == SolveStatus::Unsatisfiable;
    FeatureSet core;
    for (const Feature& f : fm.features)
        if (is_void ||
            solver.solve({Lit::negative(f.id.value)}).status == SolveStatus::Unsatisfiable)
            core.insert(f.name);
    AoResult out = AoResult::of_set(AoKind::AO13, std::move(core));
    out.void_model = is_void;
    return out;
}

/// Features present in no valid configuration; flagged on void models.
inline AoResult ao14_dead_features(const FeatureModel& fm) {
    CnfFormula cnf = compile(semantics(fm), fm.feature_count());
    SatSolver solver(cnf);
    bool is_void = solver.solve().status == SolveStatus::Unsatisfiable;
    FeatureSet dead;
    for (const Feature& f : fm.features)
        if (is_void ||
            solver.solve({Lit::positive(f.id.value)}).status == SolveStatus::Unsatisfiable)
            dead.insert(f.name);
    AoResult out = AoResult::of_set(AoKind::AO14, std::move(dead));
    out.void_model = is_void;
    return out;
}

/// Non-mandatory, non-root features forced to be selected whenever their
/// parent is. A false-optional feature occurs in some product, so dead
/// features never qualify; on a void model the set is empty and flagged.
inline AoResult ao15_false_optional(const FeatureModel& fm) {
    CnfFormula cnf = compile(semantics(fm), fm.feature_count());
    SatSolver solver(cnf);
    bool is_void = solver.solve().status == SolveStatus::Unsatisfiable;
    std::set<FeatureId> mandatory_children;
    for (const Relationship& rel : fm.relationships)
        if (rel.kind == RelKind::Mandatory)
            mandatory_children.insert(rel.children.front());

    FeatureSet result;
    for (const Feature& f : fm.features) {
        if (is_void || f.id == fm.root || mandatory_children.count(f.id))
            continue;
        if (solver.solve({Lit::positive(f.id.value)}).status == SolveStatus::Unsatisfiable)
            continue;
        std::optional<FeatureId> parent = fm.parent_of(f.id);
        std::vector<Lit> assumptions{Lit::positive(parent->value), Lit::negative(f.id.value)};
        if (solver.solve(assumptions).status == SolveStatus::Unsatisfiable)
            result.insert(f.name);
    }
    AoResult out = AoResult::of_set(AoKind::AO15, std::move(result));
    out.void_model = is_void;
    return out;
}

/// True iff every configuration of `special` is also a configuration of
/// `general`. Variables are aligned by feature name; the feature-name sets
/// must be identical.
inline AoResult ao16_generalization(const FeatureModel& general, const FeatureModel& special) {
    require_valid(general);
    require_valid(special);
    if (general.feature_count() != special.feature_count())
        throw model_error("generalization needs identical feature-name sets");
    std::map<std::string, FeatureId> special_by_name;
    for (const Feature& f : special.features)
        special_by_name[f.name] = f.id;
    for (const Feature& f : general.features)
        if (!special_by_name.count(f.name))
            throw model_error("generalization needs identical feature-name sets; '" + f.name +
                              "' is missing from one model");

    Formula general_sem = semantics(general).remap_vars(
        [&](FeatureId id) { return special_by_name.at(general.feature_name(id)); });
    Formula counterexample =
        Formula::conjunction({semantics(special), Formula::negation(std::move(general_sem))});
    CnfFormula cnf = compile(counterexample, special.feature_count());
    return AoResult::of_bool(AoKind::AO16, sat(cnf).status == SolveStatus::Unsatisfiable);
}

/// Inputs beyond the model itself, for the two operations that take one.
struct AoExtras {
    std::optional<Configuration> config;
    const FeatureModel* pair_general = nullptr;
    std::uint64_t count_budget = kDefaultCountBudget;
};

/// Uniform dispatch. AO11 needs `config`, AO16 needs `pair_general` (the
/// candidate generalization; `fm` is the special model); an extra supplied to
/// any other operation is rejected.
inline AoResult run_ao(AoKind kind, const FeatureModel& fm, const AoExtras& extras = {}) {
    if (extras.config && kind != AoKind::AO11)
        throw std::invalid_argument("configuration input is only valid for AO11");
    if (extras.pair_general && kind != AoKind::AO16)
        throw std::invalid_argument("second model input is only valid for AO16");
    switch (kind) {
    case AoKind::AO1: return ao1_features(fm);
    case AoKind::AO2: return ao2_leaf_features(fm);
    case AoKind::AO3: return ao3_tree_depth(fm);
    case AoKind::AO4: return ao4_mandatory(fm);
    case AoKind::AO5: return ao5_optional(fm);
    case AoKind::AO6: return ao6_or_groups(fm);
    case AoKind::AO7: return ao7_alt_groups(fm);
    case AoKind::AO8: return ao8_requires(fm);
    case AoKind::AO9: return ao9_excludes(fm);
    case AoKind::AO10: return ao10_satisfiable(fm);
    case AoKind::AO11:
        if (!extras.config)
            throw std::invalid_argument("AO11 needs a configuration input");
        return ao11_config_satisfiable(fm, *extras.config);
    case AoKind::AO12: return ao12_count_configurations(fm, extras.count_budget);
    case AoKind::AO13: return ao13_core_features(fm);
    case AoKind::AO14: return ao14_dead_features(fm);
    case AoKind::AO15: return ao15_false_optional(fm);
    case AoKind::AO16:
        if (!extras.pair_general)
            throw std::invalid_argument("AO16 needs a second model input");
        return ao16_generalization(*extras.pair_general, fm);
    }
    throw std::logic_error("unhandled analysis operation");
}

} // namespace fmkit
