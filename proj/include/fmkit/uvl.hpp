#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fmkit/core.hpp"
#include "fmkit/detail/expr.hpp"
#include "fmkit/detail/text.hpp"
#include "fmkit/diagnostics.hpp"

namespace fmkit {

/// A parsed UVL file: the Boolean-level model plus one warning per discarded
/// construct (attributes, abstract markers). Warnings always name the line.
struct UvlDocument {
    FeatureModel model;
    std::vector<std::string> warnings;
};

namespace detail {

struct UvlLine {
    std::size_t number = 0;
    std::size_t level = 0;
    std::string text;
};

inline bool is_uvl_keyword(std::string_view word) {
    std::string w = to_lower(word);
    return w == "features" || w == "constraints" || w == "mandatory" || w == "optional" ||
           w == "or" || w == "alternative" || w == "abstract";
}

inline bool uvl_name_needs_quotes(const std::string& name) {
    if (name.empty())
        return true;
    for (char c : name)
        if (!is_name_char(c))
            return true;
    return is_uvl_keyword(name);
}

inline std::string uvl_name(const std::string& name) {
    return uvl_name_needs_quotes(name) ? '"' + name + '"' : name;
}

/// Strips a // comment, ignoring slashes inside quoted names.
inline std::string_view strip_uvl_comment(std::string_view line) {
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"')
            in_quotes = !in_quotes;
        else if (!in_quotes && c == '/' && i + 1 < line.size() && line[i + 1] == '/')
            return line.substr(0, i);
    }
    return line;
}

/// Turns raw text into (line, level, text) rows. The first indented line
/// fixes the indent unit (a tab or a fixed space count); every later indent
/// must be a whole repetition of it.
inline std::vector<UvlLine> split_uvl_lines(std::string_view text) {
    std::vector<UvlLine> out;
    std::string unit;
    std::vector<std::string> lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = strip_uvl_comment(lines[i]);
        std::size_t lead_end = line.find_first_not_of(" \t");
        if (lead_end == std::string_view::npos)
            continue;
        std::string_view lead = line.substr(0, lead_end);
        std::string_view body = trim(line.substr(lead_end));
        if (body.empty())
            continue;

        std::size_t level = 0;
        if (!lead.empty()) {
            if (lead.find(' ') != std::string_view::npos &&
                lead.find('\t') != std::string_view::npos)
                throw parse_error(i + 1, 1, "indentation mixes tabs and spaces");
            if (unit.empty())
                unit = std::string(lead);
            if (lead.size() % unit.size() != 0)
                throw parse_error(i + 1, 1, "indentation is not a whole number of indent units");
            level = lead.size() / unit.size();
            for (std::size_t k = 0; k < level; ++k)
                if (lead.substr(k * unit.size(), unit.size()) != unit)
                    throw parse_error(i + 1, 1, "indentation mixes tabs and spaces");
        }
        if (!out.empty() && level > out.back().level + 1)
            throw parse_error(i + 1, 1, "indentation jumps more than one level");
        if (out.empty() && level != 0)
            throw parse_error(i + 1, 1, "first block must start at column 1");
        out.push_back(UvlLine{i + 1, level, std::string(body)});
    }
    return out;
}

class UvlParser {
public:
    explicit UvlParser(std::string_view text) : lines_(split_uvl_lines(text)) {}

    UvlDocument parse(std::string model_name) {
        bool saw_features = false;
        std::size_t i = 0;
        while (i < lines_.size()) {
            const UvlLine& line = lines_[i];
            std::string head = to_lower(first_word(line.text));
            if (head == "include" || head == "imports" || head == "namespace")
                throw parse_error(line.number, 1, "'" + head + "' is not supported");
            if (head == "features") {
                if (saw_features)
                    throw parse_error(line.number, 1, "duplicate features block");
                saw_features = true;
                i = parse_features_block(i + 1);
                continue;
            }
            if (head == "constraints") {
                i = parse_constraints_block(i + 1);
                continue;
            }
            throw parse_error(line.number, 1, "unknown block: " + first_word(line.text));
        }
        if (!saw_features)
            throw parse_error(1, 1, "missing features block");

        FeatureModel fm = builder_.build(model_name.empty() ? root_name_ : model_name);
        fm.root = root_id_;
        std::vector<Violation> report = validate_model(fm);
        if (!report.empty())
            throw parse_error(1, 1, "not a valid feature tree: " + report.front().message);
        return UvlDocument{std::move(fm), std::move(warnings_)};
    }

private:
    std::vector<UvlLine> lines_;
    FeatureModelBuilder builder_;
    FeatureId root_id_{};
    std::string root_name_;
    std::vector<std::string> warnings_;

    static std::string first_word(std::string_view text) {
        std::string word;
        for (char c : text) {
            if (!is_name_char(c))
                break;
            word.push_back(c);
        }
        return word;
    }

    std::size_t parse_features_block(std::size_t i) {
        if (i >= lines_.size() || lines_[i].level == 0)
            throw parse_error(i > 0 ? lines_[i - 1].number : 1, 1, "features block is empty");
        std::size_t root_level = lines_[i].level;
        FeatureId root = parse_feature_entry(i);
        root_id_ = root;
        root_name_ = builder_.features()[root.value].name;
        i = parse_feature_children(i + 1, root, root_level + 1);
        if (i < lines_.size() && lines_[i].level >= root_level)
            throw parse_error(lines_[i].number, 1, "multiple root features");
        return i;
    }

    // Parses one feature line: identifier plus discarded {...} attributes.
    FeatureId parse_feature_entry(std::size_t i) {
        const UvlLine& line = lines_[i];
        std::string_view text = line.text;
        std::size_t pos = 0;

        if (text.find('[') != std::string_view::npos)
            throw parse_error(line.number, 1, "feature cardinality is not supported");

        // An "abstract" marker is metadata only; the feature stays ordinary.
        if ((text.rfind("abstract ", 0) == 0 || text.rfind("abstract\t", 0) == 0) &&
            !trim(text.substr(9)).empty())
            text = trim(text.substr(9));

        std::string name;
        if (text[0] == '"') {
            std::size_t close = text.find('"', 1);
            if (close == std::string_view::npos)
                throw parse_error(line.number, 1, "unterminated quoted name");
            name = std::string(text.substr(1, close - 1));
            pos = close + 1;
        } else {
            name = first_word(text);
            if (name.empty())
                throw parse_error(line.number, 1, "expected a feature name");
            pos = name.size();
        }

        std::string_view rest = trim(text.substr(pos));
        std::string type_word = to_lower(name);
        if ((type_word == "integer" || type_word == "real" || type_word == "string" ||
             type_word == "boolean") &&
            !rest.empty())
            throw parse_error(line.number, 1, "numeric and typed features are not supported");
        if (!rest.empty() && rest.front() == '{') {
            if (rest.back() != '}')
                throw parse_error(line.number, 1, "unterminated attribute block");
            warnings_.push_back("line " + std::to_string(line.number) +
                                ": attributes discarded for feature " + name);
            rest = {};
        }
        if (!rest.empty())
            throw parse_error(line.number, 1, "unexpected trailing input after feature name");

        try {
            return builder_.add_feature(name);
        } catch (const model_error& e) {
            throw parse_error(line.number, 1, e.what());
        }
    }

    // Children of a feature are group headers; children of a group header are
    // features. Returns the index of the first line outside the subtree.
    std::size_t parse_feature_children(std::size_t i, FeatureId parent, std::size_t level) {
        while (i < lines_.size() && lines_[i].level >= level) {
            const UvlLine& header = lines_[i];
            if (header.level != level)
                throw parse_error(header.number, 1, "indentation jumps more than one level");
            if (header.text.find('[') != std::string::npos)
                throw parse_error(header.number, 1, "cardinality groups are not supported");
            std::string kind_word = to_lower(header.text);
            std::optional<RelKind> kind;
            if (kind_word == "mandatory")
                kind = RelKind::Mandatory;
            else if (kind_word == "optional")
                kind = RelKind::Optional;
            else if (kind_word == "or")
                kind = RelKind::Or;
            else if (kind_word == "alternative")
                kind = RelKind::Alternative;
            if (!kind)
                throw parse_error(header.number, 1,
                                  "expected a group header (mandatory, optional, or, "
                                  "alternative), got '" +
                                      header.text + "'");

            std::vector<FeatureId> members;
            std::size_t j = i + 1;
            while (j < lines_.size() && lines_[j].level >= level + 1) {
                if (lines_[j].level != level + 1)
                    throw parse_error(lines_[j].number, 1,
                                      "indentation jumps more than one level");
                FeatureId child = parse_feature_entry(j);
                members.push_back(child);
                j = parse_feature_children(j + 1, child, level + 2);
            }
            if (members.empty())
                throw parse_error(header.number, 1, "empty group");
            if (*kind == RelKind::Mandatory || *kind == RelKind::Optional) {
                for (FeatureId m : members)
                    builder_.add_relationship(parent, *kind, {m});
            } else {
                if (members.size() < 2)
                    throw parse_error(header.number, 1,
                                      "a group of this kind needs at least two children");
                builder_.add_relationship(parent, *kind, std::move(members));
            }
            i = j;
        }
        return i;
    }

    std::size_t parse_constraints_block(std::size_t i) {
        while (i < lines_.size() && lines_[i].level >= 1) {
            const UvlLine& line = lines_[i];
            if (line.level != 1)
                throw parse_error(line.number, 1, "constraints do not nest");
            NameExpr expr;
            try {
                expr = parse_name_expr(line.text, /*allow_iff=*/true);
            } catch (const expr_error& e) {
                throw parse_error(line.number, e.pos + 1, e.what());
            }
            auto lookup = [&](const std::string& name) {
                std::optional<FeatureId> id = builder_.find(name);
                if (!id)
                    throw parse_error(line.number, 1, "unknown feature in constraint: " + name);
                return *id;
            };
            // A top-level equivalence becomes two implication constraints.
            if (expr.kind == NameExpr::Kind::Iff) {
                Formula a = expr_to_formula(expr.children[0], lookup);
                Formula b = expr_to_formula(expr.children[1], lookup);
                builder_.add_constraint(Formula::implication(a, b));
                builder_.add_constraint(Formula::implication(std::move(b), std::move(a)));
            } else {
                builder_.add_constraint(expr_to_formula(expr, lookup));
            }
            ++i;
        }
        return i;
    }
};

} // namespace detail

/// Reads the Boolean level of UVL. Attributes and abstract markers are
/// discarded with a warning; cardinality groups, typed features, and imports
/// are rejected.
inline UvlDocument parse_uvl(std::string_view text, std::string model_name = "") {
    return detail::UvlParser(text).parse(std::move(model_name));
}

/// Writes Boolean-level UVL with tab indentation. Mandatory and optional
/// children of one parent are folded under a single header; each or and
/// alternative group keeps its own header. Re-parsing yields an equal model.
inline std::string render_uvl(const FeatureModel& fm) {
    require_valid(fm);
    std::string out = "features\n";

    auto indent = [](std::size_t depth) { return std::string(depth, '\t'); };

    // Emits `feature` at `depth`, then its groups one level deeper.
    auto render_feature = [&](auto&& self, FeatureId feature, std::size_t depth) -> void {
        out += indent(depth) + detail::uvl_name(fm.feature_name(feature)) + "\n";
        std::vector<FeatureId> mandatory;
        std::vector<FeatureId> optional;
        for (const Relationship& rel : fm.relationships) {
            if (rel.parent != feature)
                continue;
            if (rel.kind == RelKind::Mandatory)
                mandatory.push_back(rel.children.front());
            else if (rel.kind == RelKind::Optional)
                optional.push_back(rel.children.front());
        }
        if (!mandatory.empty()) {
            out += indent(depth + 1) + "mandatory\n";
            for (FeatureId c : mandatory)
                self(self, c, depth + 2);
        }
        if (!optional.empty()) {
            out += indent(depth + 1) + "optional\n";
            for (FeatureId c : optional)
                self(self, c, depth + 2);
        }
        for (const Relationship& rel : fm.relationships) {
            if (rel.parent != feature ||
                (rel.kind != RelKind::Or && rel.kind != RelKind::Alternative))
                continue;
            out += indent(depth + 1) + (rel.kind == RelKind::Or ? "or\n" : "alternative\n");
            for (FeatureId c : rel.children)
                self(self, c, depth + 2);
        }
    };
    render_feature(render_feature, fm.root, 1);

    if (!fm.constraints.empty()) {
        out += "constraints\n";
        for (const Formula& c : fm.constraints) {
            detail::NameExpr expr =
                detail::formula_to_expr(c, [&](FeatureId id) { return fm.feature_name(id); });
            out += "\t" + detail::render_name_expr(expr, detail::uvl_name_needs_quotes) + "\n";
        }
    }
    return out;
}

} // namespace fmkit
