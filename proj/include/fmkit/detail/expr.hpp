#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fmkit/core.hpp"
#include "fmkit/detail/text.hpp"

namespace fmkit::detail {

/// Words that terminate a bare (unquoted) feature name. Quoting lifts the
/// restriction.
inline bool is_stop_word(std::string_view word) {
    std::string w = to_lower(word);
    return w == "feature" || w == "requires" || w == "excludes" || w == "or" || w == "must" ||
           w == "can";
}

inline bool is_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
}

/// Parse failure inside one expression or statement; `pos` is a 0-based
/// character offset into the parsed text.
struct expr_error : std::runtime_error {
    std::size_t pos;
    expr_error(std::size_t position, const std::string& message)
        : std::runtime_error(message), pos(position) {}
};

/// Propositional expression over feature *names*, produced by the constraint
/// parsers before names are resolved to ids.
struct NameExpr {
    enum class Kind { Name, Not, And, Or, Implies, Iff };

    Kind kind = Kind::Name;
    std::string name;
    std::vector<NameExpr> children;

    static NameExpr leaf(std::string n) {
        NameExpr e;
        e.name = std::move(n);
        return e;
    }

    static NameExpr node(Kind k, std::vector<NameExpr> kids) {
        NameExpr e;
        e.kind = k;
        e.children = std::move(kids);
        return e;
    }

    bool operator==(const NameExpr& other) const {
        return kind == other.kind && name == other.name && children == other.children;
    }
};

/// Recursive-descent reader over one expression string. Grammar, loosest
/// binding first: <=> (left), => (right), |, &, !, atom. `<=>` is only
/// admitted when `allow_iff` is set.
class ExprParser {
public:
    ExprParser(std::string_view text, bool allow_iff) : text_(text), allow_iff_(allow_iff) {}

    NameExpr parse() {
        NameExpr e = parse_iff();
        skip_ws();
        if (pos_ != text_.size())
            fail(pos_, "unexpected trailing input in expression");
        return e;
    }

private:
    std::string_view text_;
    bool allow_iff_;
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

    bool try_consume(std::string_view token) {
        skip_ws();
        if (text_.substr(pos_).substr(0, token.size()) != token)
            return false;
        pos_ += token.size();
        return true;
    }

    NameExpr parse_iff() {
        NameExpr lhs = parse_implies();
        for (;;) {
            skip_ws();
            std::size_t op_at = pos_;
            if (!try_consume("<=>")) {
                if (pos_ < text_.size() && text_[pos_] == '<')
                    fail(pos_, "malformed operator, expected '<=>'");
                return lhs;
            }
            if (!allow_iff_)
                fail(op_at, "'<=>' is not allowed here");
            NameExpr rhs = parse_implies();
            lhs = NameExpr::node(NameExpr::Kind::Iff, {std::move(lhs), std::move(rhs)});
        }
    }

    NameExpr parse_implies() {
        NameExpr lhs = parse_or();
        skip_ws();
        // "=>" must not swallow the first char of "<=>"; '<' is handled above.
        if (pos_ + 1 < text_.size() && text_[pos_] == '=' && text_[pos_ + 1] == '>') {
            pos_ += 2;
            NameExpr rhs = parse_implies();
            return NameExpr::node(NameExpr::Kind::Implies, {std::move(lhs), std::move(rhs)});
        }
        return lhs;
    }

    NameExpr parse_or() {
        std::vector<NameExpr> parts;
        parts.push_back(parse_and());
        while (try_consume("|"))
            parts.push_back(parse_and());
        if (parts.size() == 1)
            return std::move(parts.front());
        return NameExpr::node(NameExpr::Kind::Or, std::move(parts));
    }

    NameExpr parse_and() {
        std::vector<NameExpr> parts;
        parts.push_back(parse_unary());
        while (try_consume("&"))
            parts.push_back(parse_unary());
        if (parts.size() == 1)
            return std::move(parts.front());
        return NameExpr::node(NameExpr::Kind::And, std::move(parts));
    }

    NameExpr parse_unary() {
        if (try_consume("!")) {
            NameExpr operand = parse_unary();
            return NameExpr::node(NameExpr::Kind::Not, {std::move(operand)});
        }
        return parse_atom();
    }

    NameExpr parse_atom() {
        if (at_end())
            fail(pos_, "expected a feature name or '('");
        if (try_consume("(")) {
            NameExpr inner = parse_iff();
            if (!try_consume(")"))
                fail(pos_, "missing ')'");
            return inner;
        }
        if (text_[pos_] == '"')
            return NameExpr::leaf(read_quoted());
        return NameExpr::leaf(read_bare_name());
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

    // Bare names are words of letters/digits/_/- joined by single spaces; the
    // scan stops before stop words so surrounding grammar keywords stay
    // visible to the caller.
    std::string read_bare_name() {
        std::string name;
        for (;;) {
            skip_ws();
            std::size_t word_at = pos_;
            std::string word;
            while (pos_ < text_.size() && is_name_char(text_[pos_]))
                word.push_back(text_[pos_++]);
            if (word.empty()) {
                if (name.empty())
                    fail(pos_, "expected a feature name");
                return name;
            }
            if (is_stop_word(word)) {
                pos_ = word_at;
                if (name.empty())
                    fail(word_at, "keyword '" + word + "' cannot start a feature name");
                return name;
            }
            if (!name.empty())
                name += ' ';
            name += word;
        }
    }
};

inline NameExpr parse_name_expr(std::string_view text, bool allow_iff) {
    return ExprParser(text, allow_iff).parse();
}

inline int expr_precedence(NameExpr::Kind k) {
    switch (k) {
    case NameExpr::Kind::Iff: return 1;
    case NameExpr::Kind::Implies: return 2;
    case NameExpr::Kind::Or: return 3;
    case NameExpr::Kind::And: return 4;
    case NameExpr::Kind::Not: return 5;
    case NameExpr::Kind::Name: return 6;
    }
    return 6;
}

/// Prints with the fewest parentheses that still re-parse to the identical
/// tree (same-kind nesting stays parenthesized because the parser flattens
/// unparenthesized chains).
inline std::string render_name_expr(const NameExpr& e,
                                    const std::function<bool(const std::string&)>& needs_quotes,
                                    int min_prec = 0) {
    int prec = expr_precedence(e.kind);
    std::string body;
    switch (e.kind) {
    case NameExpr::Kind::Name:
        body = needs_quotes(e.name) ? '"' + e.name + '"' : e.name;
        break;
    case NameExpr::Kind::Not:
        body = "!" + render_name_expr(e.children[0], needs_quotes, prec + 1);
        break;
    case NameExpr::Kind::And:
    case NameExpr::Kind::Or: {
        const char* sep = e.kind == NameExpr::Kind::And ? " & " : " | ";
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (i)
                body += sep;
            body += render_name_expr(e.children[i], needs_quotes, prec + 1);
        }
        break;
    }
    case NameExpr::Kind::Implies:
        body = render_name_expr(e.children[0], needs_quotes, prec + 1) + " => " +
               render_name_expr(e.children[1], needs_quotes, prec);
        break;
    case NameExpr::Kind::Iff:
        body = render_name_expr(e.children[0], needs_quotes, prec) + " <=> " +
               render_name_expr(e.children[1], needs_quotes, prec + 1);
        break;
    }
    if (prec < min_prec)
        return "(" + body + ")";
    return body;
}

/// Lowers a name expression to a Formula. `lookup` maps each name to its
/// feature id (creating or rejecting unknown names per the caller's policy).
/// Iff lowers to the conjunction of both implications.
template <typename Lookup>
Formula expr_to_formula(const NameExpr& e, Lookup&& lookup) {
    switch (e.kind) {
    case NameExpr::Kind::Name:
        return Formula::var(lookup(e.name));
    case NameExpr::Kind::Not:
        return Formula::negation(expr_to_formula(e.children[0], lookup));
    case NameExpr::Kind::And:
    case NameExpr::Kind::Or: {
        std::vector<Formula> parts;
        parts.reserve(e.children.size());
        for (const NameExpr& c : e.children)
            parts.push_back(expr_to_formula(c, lookup));
        return e.kind == NameExpr::Kind::And ? Formula::conjunction(std::move(parts))
                                             : Formula::disjunction(std::move(parts));
    }
    case NameExpr::Kind::Implies:
        return Formula::implication(expr_to_formula(e.children[0], lookup),
                                    expr_to_formula(e.children[1], lookup));
    case NameExpr::Kind::Iff: {
        Formula a = expr_to_formula(e.children[0], lookup);
        Formula b = expr_to_formula(e.children[1], lookup);
        return Formula::conjunction(
            {Formula::implication(a, b), Formula::implication(std::move(b), std::move(a))});
    }
    }
    throw std::logic_error("unhandled expression kind");
}

/// Inverse of expr_to_formula for printing: rebuilds a name expression from a
/// Formula using the model's feature names.
template <typename NameOf>
NameExpr formula_to_expr(const Formula& f, NameOf&& name_of) {
    switch (f.kind()) {
    case Formula::Kind::Var:
        return NameExpr::leaf(name_of(f.var_id()));
    case Formula::Kind::Not:
        return NameExpr::node(NameExpr::Kind::Not, {formula_to_expr(f.operands()[0], name_of)});
    case Formula::Kind::And:
    case Formula::Kind::Or: {
        std::vector<NameExpr> kids;
        kids.reserve(f.operands().size());
        for (const Formula& op : f.operands())
            kids.push_back(formula_to_expr(op, name_of));
        return NameExpr::node(f.kind() == Formula::Kind::And ? NameExpr::Kind::And
                                                             : NameExpr::Kind::Or,
                              std::move(kids));
    }
    case Formula::Kind::Implies:
        return NameExpr::node(NameExpr::Kind::Implies,
                              {formula_to_expr(f.operands()[0], name_of),
                               formula_to_expr(f.operands()[1], name_of)});
    }
    throw std::logic_error("unhandled formula kind");
}

} // namespace fmkit::detail
