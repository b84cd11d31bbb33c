#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fmkit {

/// Thrown for structurally invalid models and violated operation preconditions.
class model_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense handle into a model's feature table. Stable for the lifetime of the model.
struct FeatureId {
    std::uint32_t value = 0;
    auto operator<=>(const FeatureId&) const = default;
};

struct Feature {
    FeatureId id;
    std::string name;
};

enum class RelKind { Mandatory, Optional, Or, Alternative };

inline std::string_view to_string(RelKind k) {
    switch (k) {
    case RelKind::Mandatory: return "mandatory";
    case RelKind::Optional: return "optional";
    case RelKind::Or: return "or";
    case RelKind::Alternative: return "alternative";
    }
    return "?";
}

/// One parent-child relationship. Mandatory/Optional carry exactly one child,
/// Or/Alternative carry two or more.
struct Relationship {
    FeatureId parent;
    RelKind kind;
    std::vector<FeatureId> children;
};

/// Propositional formula over feature variables. Immutable value type; build
/// through the static factories, which enforce the node arities.
class Formula {
public:
    enum class Kind { Var, Not, And, Or, Implies };

    static Formula var(FeatureId id) {
        Formula f;
        f.kind_ = Kind::Var;
        f.var_ = id;
        return f;
    }

    static Formula negation(Formula operand) {
        Formula f;
        f.kind_ = Kind::Not;
        f.operands_.push_back(std::move(operand));
        return f;
    }

    static Formula conjunction(std::vector<Formula> operands) {
        if (operands.size() < 2)
            throw std::invalid_argument("conjunction needs at least 2 operands");
        Formula f;
        f.kind_ = Kind::And;
        f.operands_ = std::move(operands);
        return f;
    }

    static Formula disjunction(std::vector<Formula> operands) {
        if (operands.size() < 2)
            throw std::invalid_argument("disjunction needs at least 2 operands");
        Formula f;
        f.kind_ = Kind::Or;
        f.operands_ = std::move(operands);
        return f;
    }

    static Formula implication(Formula lhs, Formula rhs) {
        Formula f;
        f.kind_ = Kind::Implies;
        f.operands_.push_back(std::move(lhs));
        f.operands_.push_back(std::move(rhs));
        return f;
    }

    Kind kind() const { return kind_; }

    FeatureId var_id() const {
        if (kind_ != Kind::Var)
            throw std::logic_error("var_id on non-variable node");
        return var_;
    }

    const std::vector<Formula>& operands() const { return operands_; }

    bool operator==(const Formula& other) const {
        return kind_ == other.kind_ && (kind_ != Kind::Var || var_ == other.var_) &&
               operands_ == other.operands_;
    }

    template <typename Fn>
    void for_each_var(Fn&& fn) const {
        if (kind_ == Kind::Var) {
            fn(var_);
            return;
        }
        for (const Formula& op : operands_)
            op.for_each_var(fn);
    }

    /// Structural copy with every variable replaced through `map(id)`.
    template <typename Map>
    Formula remap_vars(Map&& map) const {
        if (kind_ == Kind::Var)
            return var(map(var_));
        Formula f;
        f.kind_ = kind_;
        f.operands_.reserve(operands_.size());
        for (const Formula& op : operands_)
            f.operands_.push_back(op.remap_vars(map));
        return f;
    }

private:
    Kind kind_ = Kind::Var;
    FeatureId var_{};
    std::vector<Formula> operands_;
};

/// Folds a non-empty list into a single formula (And for >= 2 operands).
inline Formula and_all(std::vector<Formula> parts) {
    if (parts.empty())
        throw std::invalid_argument("and_all of empty list");
    if (parts.size() == 1)
        return std::move(parts.front());
    return Formula::conjunction(std::move(parts));
}

inline Formula or_all(std::vector<Formula> parts) {
    if (parts.empty())
        throw std::invalid_argument("or_all of empty list");
    if (parts.size() == 1)
        return std::move(parts.front());
    return Formula::disjunction(std::move(parts));
}

/// `a` requires `b`.
inline Formula requires_constraint(FeatureId a, FeatureId b) {
    return Formula::implication(Formula::var(a), Formula::var(b));
}

/// `a` excludes `b`, canonically !(a & b).
inline Formula excludes_constraint(FeatureId a, FeatureId b) {
    return Formula::negation(Formula::conjunction({Formula::var(a), Formula::var(b)}));
}

inline bool valid_feature_name(std::string_view name) {
    if (name.empty())
        return false;
    if (name.front() == ' ' || name.back() == ' ')
        return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == ' ' || c == '_' || c == '-';
        if (!ok)
            return false;
    }
    return true;
}

/// Root-anchored feature tree with typed relationships and cross-tree
/// constraint formulas. Immutable by convention once built; every other
/// module consumes this type.
struct FeatureModel {
    std::string name;
    std::vector<Feature> features;
    FeatureId root{};
    std::vector<Relationship> relationships;
    std::vector<Formula> constraints;

    std::size_t feature_count() const { return features.size(); }

    bool valid_id(FeatureId id) const { return id.value < features.size(); }

    const std::string& feature_name(FeatureId id) const {
        if (!valid_id(id))
            throw model_error("feature id out of range");
        return features[id.value].name;
    }

    std::optional<FeatureId> find_feature(std::string_view name) const {
        for (const Feature& f : features)
            if (f.name == name)
                return f.id;
        return std::nullopt;
    }

    /// Tree parent, if any. Root (and detached features in invalid models)
    /// have none.
    std::optional<FeatureId> parent_of(FeatureId id) const {
        for (const Relationship& rel : relationships)
            for (FeatureId child : rel.children)
                if (child == id)
                    return rel.parent;
        return std::nullopt;
    }
};

/// Incremental construction helper. Names are compared exactly (case-sensitive).
class FeatureModelBuilder {
public:
    FeatureId add_feature(std::string name) {
        if (!valid_feature_name(name))
            throw model_error("invalid feature name: '" + name + "'");
        if (find(name))
            throw model_error("duplicate feature name: " + name);
        FeatureId id{static_cast<std::uint32_t>(features_.size())};
        features_.push_back(Feature{id, std::move(name)});
        return id;
    }

    FeatureId find_or_add(std::string name) {
        if (auto id = find(name))
            return *id;
        return add_feature(std::move(name));
    }

    std::optional<FeatureId> find(std::string_view name) const {
        for (const Feature& f : features_)
            if (f.name == name)
                return f.id;
        return std::nullopt;
    }

    const std::vector<Feature>& features() const { return features_; }

    void set_root(FeatureId id) { root_ = id; }

    void add_relationship(FeatureId parent, RelKind kind, std::vector<FeatureId> children) {
        relationships_.push_back(Relationship{parent, kind, std::move(children)});
    }

    void add_constraint(Formula f) { constraints_.push_back(std::move(f)); }

    FeatureModel build(std::string model_name) const {
        FeatureModel fm;
        fm.name = std::move(model_name);
        fm.features = features_;
        fm.root = root_;
        fm.relationships = relationships_;
        fm.constraints = constraints_;
        return fm;
    }

private:
    std::vector<Feature> features_;
    FeatureId root_{};
    std::vector<Relationship> relationships_;
    std::vector<Formula> constraints_;
};

struct Violation {
    std::string message;
};

/// Checks every FeatureModel invariant. Empty report means the model is valid;
/// violations are data, not failures.
inline std::vector<Violation> validate_model(const FeatureModel& fm) {
    std::vector<Violation> out;
    auto flag = [&](std::string msg) { out.push_back(Violation{std::move(msg)}); };

    if (fm.features.empty()) {
        flag("model has no features");
        return out;
    }
    for (std::size_t i = 0; i < fm.features.size(); ++i) {
        const Feature& f = fm.features[i];
        if (f.id.value != i)
            flag("feature table id mismatch at index " + std::to_string(i));
        if (!valid_feature_name(f.name))
            flag("invalid feature name: '" + f.name + "'");
        for (std::size_t j = i + 1; j < fm.features.size(); ++j)
            if (fm.features[j].name == f.name)
                flag("duplicate feature name: " + f.name);
    }
    if (!fm.valid_id(fm.root)) {
        flag("root id out of range");
        return out;
    }

    std::vector<std::uint32_t> parent_count(fm.features.size(), 0);
    for (const Relationship& rel : fm.relationships) {
        if (!fm.valid_id(rel.parent)) {
            flag("relationship parent id out of range");
            continue;
        }
        if (rel.children.empty())
            flag("relationship with no children under " + fm.feature_name(rel.parent));
        bool arity_ok = (rel.kind == RelKind::Mandatory || rel.kind == RelKind::Optional)
                            ? rel.children.size() == 1
                            : rel.children.size() >= 2;
        if (!arity_ok)
            flag("bad child count for " + std::string(to_string(rel.kind)) +
                 " relationship under " + fm.feature_name(rel.parent));
        std::set<FeatureId> seen;
        for (FeatureId child : rel.children) {
            if (!fm.valid_id(child)) {
                flag("relationship child id out of range");
                continue;
            }
            if (child == rel.parent)
                flag("feature is its own child: " + fm.feature_name(child));
            if (!seen.insert(child).second)
                flag("duplicate child in one relationship: " + fm.feature_name(child));
            parent_count[child.value] += 1;
        }
    }

    if (parent_count[fm.root.value] > 0)
        flag("root is a relationship child: " + fm.feature_name(fm.root));
    for (const Feature& f : fm.features) {
        if (f.id == fm.root)
            continue;
        if (parent_count[f.id.value] == 0)
            flag("feature not attached to the tree: " + f.name);
        else if (parent_count[f.id.value] > 1)
            flag("multiple parents: " + f.name);
    }

    // With per-feature parent uniqueness established, reachability from the
    // root is what rules out cycles among the remaining edges.
    {
        std::vector<bool> reached(fm.features.size(), false);
        std::vector<FeatureId> stack{fm.root};
        reached[fm.root.value] = true;
        while (!stack.empty()) {
            FeatureId cur = stack.back();
            stack.pop_back();
            for (const Relationship& rel : fm.relationships) {
                if (rel.parent != cur)
                    continue;
                for (FeatureId child : rel.children)
                    if (fm.valid_id(child) && !reached[child.value]) {
                        reached[child.value] = true;
                        stack.push_back(child);
                    }
            }
        }
        for (const Feature& f : fm.features)
            if (!reached[f.id.value] && parent_count[f.id.value] >= 1)
                flag("relationship cycle involving: " + f.name);
    }

    for (const Formula& c : fm.constraints) {
        bool bad_ref = false;
        c.for_each_var([&](FeatureId id) {
            if (!fm.valid_id(id))
                bad_ref = true;
        });
        if (bad_ref)
            flag("unknown feature in constraint");
    }
    return out;
}

inline void require_valid(const FeatureModel& fm) {
    std::vector<Violation> report = validate_model(fm);
    if (!report.empty())
        throw model_error("invalid model '" + fm.name + "': " + report.front().message);
}

/// Propositional semantics of the model as one formula:
///   root selected; mandatory child c of p: c <=> p; optional: c => p;
///   or-group under p: each child implies p and p implies the disjunction;
///   alternative adds pairwise exclusion; plus all cross-tree constraints.
inline Formula semantics(const FeatureModel& fm) {
    require_valid(fm);
    std::vector<Formula> parts;
    parts.push_back(Formula::var(fm.root));
    for (const Relationship& rel : fm.relationships) {
        Formula parent = Formula::var(rel.parent);
        switch (rel.kind) {
        case RelKind::Mandatory: {
            FeatureId c = rel.children.front();
            parts.push_back(Formula::implication(Formula::var(c), parent));
            parts.push_back(Formula::implication(parent, Formula::var(c)));
            break;
        }
        case RelKind::Optional: {
            FeatureId c = rel.children.front();
            parts.push_back(Formula::implication(Formula::var(c), parent));
            break;
        }
        case RelKind::Or:
        case RelKind::Alternative: {
            std::vector<Formula> members;
            for (FeatureId c : rel.children) {
                parts.push_back(Formula::implication(Formula::var(c), parent));
                members.push_back(Formula::var(c));
            }
            parts.push_back(Formula::implication(parent, or_all(std::move(members))));
            if (rel.kind == RelKind::Alternative) {
                for (std::size_t i = 0; i < rel.children.size(); ++i)
                    for (std::size_t j = i + 1; j < rel.children.size(); ++j)
                        parts.push_back(excludes_constraint(rel.children[i], rel.children[j]));
            }
            break;
        }
        }
    }
    for (const Formula& c : fm.constraints)
        parts.push_back(c);
    return and_all(std::move(parts));
}

inline bool eval_formula(const Formula& f, const std::vector<bool>& assignment) {
    switch (f.kind()) {
    case Formula::Kind::Var:
        return assignment.at(f.var_id().value);
    case Formula::Kind::Not:
        return !eval_formula(f.operands().front(), assignment);
    case Formula::Kind::And:
        for (const Formula& op : f.operands())
            if (!eval_formula(op, assignment))
                return false;
        return true;
    case Formula::Kind::Or:
        for (const Formula& op : f.operands())
            if (eval_formula(op, assignment))
                return true;
        return false;
    case Formula::Kind::Implies:
        return !eval_formula(f.operands()[0], assignment) ||
               eval_formula(f.operands()[1], assignment);
    }
    throw std::logic_error("unhandled formula kind");
}

enum class Completeness { Full, Partial };

/// Selected/deselected feature sets. Full configurations cover every feature.
struct Configuration {
    std::set<FeatureId> selected;
    std::set<FeatureId> deselected;
    Completeness completeness = Completeness::Full;
};

inline Configuration make_configuration(const FeatureModel& fm,
                                        const std::vector<std::string>& selected,
                                        const std::vector<std::string>& deselected,
                                        Completeness completeness) {
    Configuration cfg;
    cfg.completeness = completeness;
    auto lookup = [&](const std::string& name) {
        std::optional<FeatureId> id = fm.find_feature(name);
        if (!id)
            throw model_error("unknown feature in configuration: " + name);
        return *id;
    };
    for (const std::string& n : selected)
        cfg.selected.insert(lookup(n));
    for (const std::string& n : deselected) {
        FeatureId id = lookup(n);
        if (cfg.selected.count(id))
            throw model_error("feature both selected and deselected: " + n);
        cfg.deselected.insert(id);
    }
    if (completeness == Completeness::Full &&
        cfg.selected.size() + cfg.deselected.size() != fm.feature_count())
        throw model_error("full configuration must cover every feature");
    return cfg;
}

inline constexpr std::size_t kEnumerationFeatureGuard = 25;

/// Brute-force oracle: all total assignments satisfying semantics(fm), ordered
/// by the selected-set bit vector read as an integer (feature 0 = lowest bit).
/// Deterministic. Refuses models above the feature-count guard, and refuses to
/// drop configurations beyond `limit` unless truncation was asked for.
inline std::vector<Configuration> enumerate_configurations(const FeatureModel& fm,
                                                           std::uint64_t limit,
                                                           bool allow_truncation = false) {
    require_valid(fm);
    if (limit == 0)
        throw std::invalid_argument("enumeration limit must be positive");
    std::size_t n = fm.feature_count();
    if (n > kEnumerationFeatureGuard)
        throw model_error("model too large for exhaustive enumeration (" + std::to_string(n) +
                          " features, guard " + std::to_string(kEnumerationFeatureGuard) + ")");
    Formula sem = semantics(fm);
    std::vector<Configuration> out;
    std::vector<bool> assignment(n, false);
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (std::size_t i = 0; i < n; ++i)
            assignment[i] = (mask >> i) & 1u;
        if (!eval_formula(sem, assignment))
            continue;
        if (out.size() == limit) {
            if (allow_truncation)
                return out;
            throw model_error("configuration count exceeds limit " + std::to_string(limit));
        }
        Configuration cfg;
        cfg.completeness = Completeness::Full;
        for (std::size_t i = 0; i < n; ++i) {
            FeatureId id{static_cast<std::uint32_t>(i)};
            (assignment[i] ? cfg.selected : cfg.deselected).insert(id);
        }
        out.push_back(std::move(cfg));
    }
    return out;
}

} // namespace fmkit
