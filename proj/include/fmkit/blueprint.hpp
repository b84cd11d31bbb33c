#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fmkit/core.hpp"
#include "fmkit/detail/expr.hpp"
#include "fmkit/detail/text.hpp"
#include "fmkit/diagnostics.hpp"

namespace fmkit {

enum class StatementKind {
    RootDecl,
    MustHave,
    CanHave,
    AlternativeGroup,
    OrGroup,
    Requires,
    Excludes,
    RawConstraint
};

/// Position of one statement in the source: 1-based line and column range.
struct SourceSpan {
    std::size_t line = 0;
    std::size_t col_begin = 0;
    std::size_t col_end = 0;
};

/// One parsed statement. `subject` is the root name for RootDecl and the
/// parent/left-hand feature otherwise; `objects` holds child or right-hand
/// names; RawConstraint carries its expression instead.
struct BlueprintStatement {
    StatementKind kind = StatementKind::RootDecl;
    std::string subject;
    std::vector<std::string> objects;
    detail::NameExpr expr;
    SourceSpan span;
};

struct BlueprintDoc {
    std::string model_name;
    std::string source;
    std::vector<BlueprintStatement> statements;
};

namespace detail {

/// Statement-level reader for one source line (comment markers, blanks, and
/// the optional trailing period already stripped by the caller).
class LineParser {
public:
    explicit LineParser(std::string_view text) : text_(text) {}

    BlueprintStatement parse() {
        BlueprintStatement st;
        std::string head = preview_word();
        if (head == "the") {
            take_word();
            expect_keyword("root");
            expect_keyword("feature");
            expect_keyword("is");
            st.kind = StatementKind::RootDecl;
            st.subject = read_name();
            expect_end();
            return st;
        }
        if (head == "constraint") {
            take_word();
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != ':')
                fail(pos_, "expected ':' after 'Constraint'");
            ++pos_;
            st.kind = StatementKind::RawConstraint;
            std::string_view rest = text_.substr(pos_);
            try {
                st.expr = parse_name_expr(rest, /*allow_iff=*/false);
            } catch (const expr_error& e) {
                fail(pos_ + e.pos, e.what());
            }
            return st;
        }
        if (head != "feature")
            fail(pos_, "expected 'The root feature is', 'Feature', or 'Constraint:'");
        take_word();
        st.subject = read_name();

        if (try_keyword("requires")) {
            expect_keyword("feature");
            st.kind = StatementKind::Requires;
            st.objects.push_back(read_name());
            expect_end();
            return st;
        }
        if (try_keyword("excludes")) {
            expect_keyword("feature");
            st.kind = StatementKind::Excludes;
            st.objects.push_back(read_name());
            expect_end();
            return st;
        }
        if (try_keyword("must")) {
            expect_keyword("have");
            parse_group_tail(st, /*can_be=*/false);
            return st;
        }
        if (try_keyword("can")) {
            if (try_keyword("have")) {
                expect_keyword("feature");
                st.kind = StatementKind::CanHave;
                st.objects.push_back(read_name());
                expect_end();
                return st;
            }
            expect_keyword("be");
            parse_group_tail(st, /*can_be=*/true);
            return st;
        }
        fail(pos_, "expected 'requires', 'excludes', 'must have', 'can have', or 'can be'");
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(std::size_t at, const std::string& msg) { throw expr_error(at, msg); }

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t'))
            ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ == text_.size();
    }

    void expect_end() {
        if (!at_end())
            fail(pos_, "unexpected trailing input after statement");
    }

    std::string preview_word() {
        skip_ws();
        std::size_t p = pos_;
        std::string word;
        while (p < text_.size() && is_name_char(text_[p]))
            word.push_back(text_[p++]);
        return to_lower(word);
    }

    std::string take_word() {
        skip_ws();
        std::string word;
        while (pos_ < text_.size() && is_name_char(text_[pos_]))
            word.push_back(text_[pos_++]);
        return word;
    }

    bool try_keyword(std::string_view kw) {
        if (preview_word() != kw)
            return false;
        take_word();
        return true;
    }

    void expect_keyword(std::string_view kw) {
        skip_ws();
        if (!try_keyword(kw))
            fail(pos_, "expected '" + std::string(kw) + "'");
    }

    bool try_punct(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string read_name() {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '"')
            return read_quoted();
        std::string name;
        for (;;) {
            std::string word = preview_word();
            if (word.empty() || is_stop_word(word)) {
                if (name.empty())
                    fail(pos_, word.empty() ? "expected a feature name"
                                            : "keyword '" + word +
                                                  "' cannot start a feature name");
                return name;
            }
            if (!name.empty())
                name += ' ';
            name += take_word();
        }
    }

    std::string read_quoted() {
        std::size_t open = pos_;
        ++pos_;
        std::size_t close = text_.find('"', pos_);
        if (close == std::string_view::npos)
            fail(open, "unterminated quoted name");
        std::string name(text_.substr(pos_, close - pos_));
        pos_ = close + 1;
        if (name.empty())
            fail(open, "empty quoted name");
        return name;
    }

    // Member list after "must have" / "can be". Single member without an
    // or-part is Mandatory ("must have" only); an or-part ending in a feature
    // is an alternative group; "or both" / "or any combination" ends an
    // or-group ("can be" only).
    void parse_group_tail(BlueprintStatement& st, bool can_be) {
        expect_keyword("feature");
        st.objects.push_back(read_name());
        for (;;) {
            bool comma = try_punct(',');
            if (try_keyword("or")) {
                if (try_keyword("both")) {
                    finish_or_group(st, can_be, "both");
                    return;
                }
                if (try_keyword("any")) {
                    expect_keyword("combination");
                    finish_or_group(st, can_be, "any combination");
                    return;
                }
                expect_keyword("feature");
                st.objects.push_back(read_name());
                expect_end();
                st.kind = StatementKind::AlternativeGroup;
                return;
            }
            if (comma) {
                expect_keyword("feature");
                st.objects.push_back(read_name());
                continue;
            }
            if (at_end()) {
                if (!can_be && st.objects.size() == 1) {
                    st.kind = StatementKind::MustHave;
                    return;
                }
                fail(pos_, st.objects.size() == 1
                               ? "'can be' needs a group ending in 'or ...'"
                               : "expected 'or' before the last group member");
            }
            fail(pos_, "expected ',', 'or', or end of statement");
        }
    }

    void finish_or_group(BlueprintStatement& st, bool can_be, const std::string& tail) {
        expect_end();
        if (!can_be)
            fail(pos_, "'or " + tail + "' is only valid with 'can be'");
        if (st.objects.size() < 2)
            fail(pos_, "a group needs at least two member features");
        st.kind = StatementKind::OrGroup;
    }
};

inline bool blueprint_name_needs_quotes(const std::string& name) {
    if (name.find("  ") != std::string::npos)
        return true;
    for (const std::string& word : split_whitespace(name))
        if (is_stop_word(word))
            return true;
    for (char c : name)
        if (!is_name_char(c) && c != ' ')
            return true;
    return false;
}

inline std::string blueprint_name(const std::string& name) {
    return blueprint_name_needs_quotes(name) ? '"' + name + '"' : name;
}

} // namespace detail

/// Parses blueprint text: one statement per non-blank, non-comment line,
/// optional trailing period, '#' comments, keywords case-insensitive. All
/// syntax problems are collected and thrown together.
inline BlueprintDoc parse_blueprint(std::string_view text, std::string model_name = "") {
    BlueprintDoc doc;
    doc.model_name = std::move(model_name);
    doc.source = std::string(text);
    std::vector<Diagnostic> diags;
    bool have_root = false;

    std::vector<std::string> lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        // '#' opens a comment for the rest of the line unless inside a quoted name.
        bool in_quote = false;
        for (std::size_t p = 0; p < line.size(); ++p) {
            if (line[p] == '"')
                in_quote = !in_quote;
            else if (line[p] == '#' && !in_quote) {
                line = line.substr(0, p);
                break;
            }
        }
        std::string_view trimmed = detail::trim(line);
        if (trimmed.empty())
            continue;
        std::size_t lead = line.find_first_not_of(" \t");
        if (trimmed.back() == '.')
            trimmed.remove_suffix(1);
        trimmed = detail::trim(trimmed);
        if (trimmed.empty()) {
            diags.push_back(Diagnostic{i + 1, lead + 1, "statement is just a period"});
            continue;
        }
        try {
            detail::LineParser parser(trimmed);
            BlueprintStatement st = parser.parse();
            st.span = SourceSpan{i + 1, lead + 1, lead + trimmed.size()};
            if (st.kind == StatementKind::RootDecl) {
                if (have_root) {
                    diags.push_back(Diagnostic{i + 1, lead + 1, "duplicate root declaration"});
                    continue;
                }
                have_root = true;
                if (doc.model_name.empty())
                    doc.model_name = st.subject;
            }
            doc.statements.push_back(std::move(st));
        } catch (const detail::expr_error& e) {
            diags.push_back(Diagnostic{i + 1, lead + e.pos + 1, e.what()});
        }
    }
    if (!diags.empty())
        throw parse_error(std::move(diags));
    return doc;
}

/// Builds the feature model: features are created on first mention, the
/// declared root becomes the model root, and the result must pass validation
/// (orphans and double parents surface here).
inline FeatureModel resolve(const BlueprintDoc& doc) {
    FeatureModelBuilder builder;
    std::optional<FeatureId> root;
    for (const BlueprintStatement& st : doc.statements) {
        switch (st.kind) {
        case StatementKind::RootDecl:
            if (root)
                throw model_error("duplicate root declaration");
            root = builder.find_or_add(st.subject);
            break;
        case StatementKind::MustHave:
        case StatementKind::CanHave:
        case StatementKind::AlternativeGroup:
        case StatementKind::OrGroup: {
            FeatureId parent = builder.find_or_add(st.subject);
            std::vector<FeatureId> children;
            for (const std::string& obj : st.objects)
                children.push_back(builder.find_or_add(obj));
            RelKind kind = st.kind == StatementKind::MustHave        ? RelKind::Mandatory
                           : st.kind == StatementKind::CanHave       ? RelKind::Optional
                           : st.kind == StatementKind::AlternativeGroup ? RelKind::Alternative
                                                                        : RelKind::Or;
            builder.add_relationship(parent, kind, std::move(children));
            break;
        }
        case StatementKind::Requires:
            builder.add_constraint(requires_constraint(builder.find_or_add(st.subject),
                                                       builder.find_or_add(st.objects.front())));
            break;
        case StatementKind::Excludes:
            builder.add_constraint(excludes_constraint(builder.find_or_add(st.subject),
                                                       builder.find_or_add(st.objects.front())));
            break;
        case StatementKind::RawConstraint:
            builder.add_constraint(detail::expr_to_formula(
                st.expr, [&](const std::string& name) { return builder.find_or_add(name); }));
            break;
        }
    }
    if (!root)
        throw model_error("no root declaration");
    FeatureModel fm =
        builder.build(doc.model_name.empty() ? "model" : doc.model_name);
    fm.root = *root;
    std::vector<Violation> report = validate_model(fm);
    if (!report.empty()) {
        std::string msg = "blueprint does not form a valid model: ";
        for (std::size_t i = 0; i < report.size(); ++i) {
            if (i)
                msg += "; ";
            msg += report[i].message;
        }
        throw model_error(msg);
    }
    return fm;
}

/// Canonical printer: root declaration, relationships in depth-first
/// pre-order, then constraints in stored order. Re-parsing the output yields
/// an equal model.
inline std::string render_blueprint(const FeatureModel& fm) {
    require_valid(fm);
    std::string out = "The root feature is " + detail::blueprint_name(fm.feature_name(fm.root)) +
                      ".\n";

    auto feature_ref = [&](FeatureId id) {
        return "Feature " + detail::blueprint_name(fm.feature_name(id));
    };

    auto render_relationship = [&](const Relationship& rel) {
        std::string line = feature_ref(rel.parent);
        switch (rel.kind) {
        case RelKind::Mandatory:
            line += " must have " + feature_ref(rel.children.front());
            break;
        case RelKind::Optional:
            line += " can have " + feature_ref(rel.children.front());
            break;
        case RelKind::Alternative: {
            line += " can be ";
            if (rel.children.size() == 2) {
                line += feature_ref(rel.children[0]) + " or " + feature_ref(rel.children[1]);
            } else {
                for (std::size_t i = 0; i + 1 < rel.children.size(); ++i)
                    line += feature_ref(rel.children[i]) + ", ";
                line += "or " + feature_ref(rel.children.back());
            }
            break;
        }
        case RelKind::Or: {
            line += " can be ";
            for (FeatureId c : rel.children)
                line += feature_ref(c) + ", ";
            line += rel.children.size() == 2 ? "or both" : "or any combination";
            break;
        }
        }
        return line + ".\n";
    };

    // Depth-first pre-order over the tree, keeping each feature's
    // relationships in stored order.
    std::vector<FeatureId> stack{fm.root};
    while (!stack.empty()) {
        FeatureId cur = stack.back();
        stack.pop_back();
        std::vector<FeatureId> children;
        for (const Relationship& rel : fm.relationships) {
            if (rel.parent != cur)
                continue;
            out += render_relationship(rel);
            for (FeatureId c : rel.children)
                children.push_back(c);
        }
        for (auto it = children.rbegin(); it != children.rend(); ++it)
            stack.push_back(*it);
    }

    auto as_requires = [](const Formula& f) -> std::optional<std::pair<FeatureId, FeatureId>> {
        if (f.kind() != Formula::Kind::Implies)
            return std::nullopt;
        const Formula& a = f.operands()[0];
        const Formula& b = f.operands()[1];
        if (a.kind() != Formula::Kind::Var || b.kind() != Formula::Kind::Var)
            return std::nullopt;
        return std::make_pair(a.var_id(), b.var_id());
    };
    auto as_excludes = [](const Formula& f) -> std::optional<std::pair<FeatureId, FeatureId>> {
        if (f.kind() != Formula::Kind::Not)
            return std::nullopt;
        const Formula& inner = f.operands()[0];
        if (inner.kind() != Formula::Kind::And || inner.operands().size() != 2)
            return std::nullopt;
        const Formula& a = inner.operands()[0];
        const Formula& b = inner.operands()[1];
        if (a.kind() != Formula::Kind::Var || b.kind() != Formula::Kind::Var)
            return std::nullopt;
        return std::make_pair(a.var_id(), b.var_id());
    };

    for (const Formula& c : fm.constraints) {
        if (auto req = as_requires(c)) {
            out += feature_ref(req->first) + " requires " + feature_ref(req->second) + ".\n";
        } else if (auto exc = as_excludes(c)) {
            out += feature_ref(exc->first) + " excludes " + feature_ref(exc->second) + ".\n";
        } else {
            detail::NameExpr expr = detail::formula_to_expr(
                c, [&](FeatureId id) { return fm.feature_name(id); });
            out += "Constraint: " +
                   detail::render_name_expr(expr, detail::blueprint_name_needs_quotes) + ".\n";
        }
    }
    return out;
}

/// Flips the kind of `swaps` distinct relationships chosen uniformly without
/// replacement (Mandatory <-> Optional, Or <-> Alternative). Same inputs give
/// the same variant on every platform: mt19937_64(seed) drives a partial
/// Fisher-Yates shuffle via `rng() % remaining`.
inline FeatureModel generate_variant(const FeatureModel& fm, std::uint64_t seed,
                                     std::size_t swaps) {
    require_valid(fm);
    if (swaps == 0)
        throw std::invalid_argument("swaps must be positive");
    if (fm.relationships.empty())
        throw model_error("model has no relationships to swap");
    if (swaps > fm.relationships.size())
        throw model_error("swaps exceeds number of relationships (" +
                          std::to_string(fm.relationships.size()) + ")");

    std::vector<std::size_t> order(fm.relationships.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < swaps; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (order.size() - i));
        std::swap(order[i], order[j]);
    }

    FeatureModel out = fm;
    for (std::size_t i = 0; i < swaps; ++i) {
        RelKind& kind = out.relationships[order[i]].kind;
        switch (kind) {
        case RelKind::Mandatory: kind = RelKind::Optional; break;
        case RelKind::Optional: kind = RelKind::Mandatory; break;
        case RelKind::Or: kind = RelKind::Alternative; break;
        case RelKind::Alternative: kind = RelKind::Or; break;
        }
    }
    return out;
}

/// Whitespace tokenization: maximal non-whitespace runs.
inline std::size_t token_count(std::string_view text) {
    return detail::split_whitespace(text).size();
}

} // namespace fmkit
