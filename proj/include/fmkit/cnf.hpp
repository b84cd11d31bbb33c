#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fmkit/core.hpp"
#include "fmkit/detail/text.hpp"

namespace fmkit {

/// Literal over 0-based variables, encoded as 2*var (positive) or 2*var+1
/// (negated).
struct Lit {
    std::uint32_t code = 0;

    static Lit positive(std::uint32_t var) { return Lit{var << 1}; }
    static Lit negative(std::uint32_t var) { return Lit{(var << 1) | 1u}; }

    std::uint32_t var() const { return code >> 1; }
    bool negated() const { return code & 1u; }
    Lit operator~() const { return Lit{code ^ 1u}; }

    int to_dimacs() const {
        int v = static_cast<int>(var()) + 1;
        return negated() ? -v : v;
    }
    static Lit from_dimacs(int value) {
        if (value == 0)
            throw std::invalid_argument("DIMACS literal cannot be 0");
        std::uint32_t var = static_cast<std::uint32_t>(value > 0 ? value : -value) - 1;
        return value > 0 ? positive(var) : negative(var);
    }

    auto operator<=>(const Lit&) const = default;
};

using Clause = std::vector<Lit>;

/// CNF over `num_vars` variables. Variables [0, num_features) are the
/// feature variables, in FeatureId order; the rest are Tseitin auxiliaries
/// whose values are functionally determined by the feature variables.
struct CnfFormula {
    std::size_t num_vars = 0;
    std::size_t num_features = 0;
    std::vector<Clause> clauses;
};

namespace detail {

/// Tseitin-style compiler. Clause-shaped structure is emitted directly;
/// subformulas in literal position get an auxiliary variable with a full
/// (both-polarity) definition, so every total CNF model projects to exactly
/// one feature assignment and vice versa.
class CnfCompiler {
public:
    explicit CnfCompiler(std::size_t num_features) : cnf_{num_features, num_features, {}} {}

    CnfFormula take(const Formula& f) {
        assert_true(f);
        return std::move(cnf_);
    }

private:
    CnfFormula cnf_;

    void emit(Clause clause) { cnf_.clauses.push_back(std::move(clause)); }

    std::uint32_t fresh_var() { return static_cast<std::uint32_t>(cnf_.num_vars++); }

    Lit feature_lit(FeatureId id) {
        if (id.value >= cnf_.num_features)
            throw std::logic_error("formula variable outside the feature range");
        return Lit::positive(id.value);
    }

    void assert_true(const Formula& f) {
        switch (f.kind()) {
        case Formula::Kind::Var:
            emit({feature_lit(f.var_id())});
            return;
        case Formula::Kind::Not:
            assert_false(f.operands()[0]);
            return;
        case Formula::Kind::And:
            for (const Formula& op : f.operands())
                assert_true(op);
            return;
        case Formula::Kind::Or:
        case Formula::Kind::Implies: {
            Clause clause;
            collect_clause(f, false, clause);
            emit(std::move(clause));
            return;
        }
        }
    }

    void assert_false(const Formula& f) {
        switch (f.kind()) {
        case Formula::Kind::Var:
            emit({~feature_lit(f.var_id())});
            return;
        case Formula::Kind::Not:
            assert_true(f.operands()[0]);
            return;
        case Formula::Kind::And: {
            Clause clause;
            collect_clause(f, true, clause);
            emit(std::move(clause));
            return;
        }
        case Formula::Kind::Or:
            for (const Formula& op : f.operands())
                assert_false(op);
            return;
        case Formula::Kind::Implies:
            assert_true(f.operands()[0]);
            assert_false(f.operands()[1]);
            return;
        }
    }

    // Gathers the disjuncts of one top-level clause. Only a subtree that is
    // not clause-shaped in its polarity (a bare conjunction, or a negated
    // disjunction or implication) costs an auxiliary variable.
    void collect_clause(const Formula& f, bool negate, Clause& out) {
        switch (f.kind()) {
        case Formula::Kind::Var: {
            Lit l = feature_lit(f.var_id());
            out.push_back(negate ? ~l : l);
            return;
        }
        case Formula::Kind::Not:
            collect_clause(f.operands()[0], !negate, out);
            return;
        case Formula::Kind::And:
            if (negate) {
                for (const Formula& op : f.operands())
                    collect_clause(op, true, out);
            } else {
                out.push_back(encode_literal(f));
            }
            return;
        case Formula::Kind::Or:
            if (negate) {
                out.push_back(~encode_literal(f));
            } else {
                for (const Formula& op : f.operands())
                    collect_clause(op, false, out);
            }
            return;
        case Formula::Kind::Implies:
            if (negate) {
                out.push_back(~encode_literal(f));
            } else {
                collect_clause(f.operands()[0], true, out);
                collect_clause(f.operands()[1], false, out);
            }
            return;
        }
    }

    Lit encode_literal(const Formula& f) {
        switch (f.kind()) {
        case Formula::Kind::Var:
            return feature_lit(f.var_id());
        case Formula::Kind::Not:
            return ~encode_literal(f.operands()[0]);
        case Formula::Kind::And: {
            std::vector<Lit> lits;
            for (const Formula& op : f.operands())
                lits.push_back(encode_literal(op));
            Lit g = Lit::positive(fresh_var());
            Clause big{g};
            for (Lit l : lits) {
                emit({~g, l});
                big.push_back(~l);
            }
            emit(std::move(big));
            return g;
        }
        case Formula::Kind::Or: {
            std::vector<Lit> lits;
            for (const Formula& op : f.operands())
                lits.push_back(encode_literal(op));
            Lit g = Lit::positive(fresh_var());
            Clause big{~g};
            for (Lit l : lits) {
                emit({g, ~l});
                big.push_back(l);
            }
            emit(std::move(big));
            return g;
        }
        case Formula::Kind::Implies: {
            Lit a = encode_literal(f.operands()[0]);
            Lit b = encode_literal(f.operands()[1]);
            Lit g = Lit::positive(fresh_var());
            emit({~g, ~a, b});
            emit({g, a});
            emit({g, ~b});
            return g;
        }
        }
        throw std::logic_error("unhandled formula kind");
    }
};

} // namespace detail

/// Compiles a formula whose variables are feature ids below `num_features`.
inline CnfFormula compile(const Formula& formula, std::size_t num_features) {
    return detail::CnfCompiler(num_features).take(formula);
}

inline std::string to_dimacs(const CnfFormula& cnf) {
    std::string out = "p cnf " + std::to_string(cnf.num_vars) + " " +
                      std::to_string(cnf.clauses.size()) + "\n";
    for (const Clause& clause : cnf.clauses) {
        for (Lit l : clause)
            out += std::to_string(l.to_dimacs()) + " ";
        out += "0\n";
    }
    return out;
}

/// Reads DIMACS CNF. The feature prefix is unknown to the format, so
/// num_features = num_vars.
inline CnfFormula parse_dimacs(std::string_view text) {
    CnfFormula cnf;
    bool have_header = false;
    std::size_t declared_clauses = 0;
    Clause current;
    for (const std::string& line : detail::split_lines(text)) {
        std::vector<std::string> tokens = detail::split_whitespace(line);
        if (tokens.empty() || tokens.front() == "c")
            continue;
        if (tokens.front() == "p") {
            if (have_header || tokens.size() != 4 || tokens[1] != "cnf")
                throw std::runtime_error("bad DIMACS header");
            have_header = true;
            cnf.num_vars = static_cast<std::size_t>(std::strtoull(tokens[2].c_str(), nullptr, 10));
            declared_clauses =
                static_cast<std::size_t>(std::strtoull(tokens[3].c_str(), nullptr, 10));
            continue;
        }
        if (!have_header)
            throw std::runtime_error("DIMACS clause before header");
        for (const std::string& tok : tokens) {
            char* end = nullptr;
            long value = std::strtol(tok.c_str(), &end, 10);
            if (end == tok.c_str() || *end != '\0')
                throw std::runtime_error("bad DIMACS literal: " + tok);
            if (value == 0) {
                cnf.clauses.push_back(std::move(current));
                current.clear();
                continue;
            }
            Lit l = Lit::from_dimacs(static_cast<int>(value));
            if (l.var() >= cnf.num_vars)
                throw std::runtime_error("DIMACS literal out of range: " + tok);
            current.push_back(l);
        }
    }
    if (!have_header)
        throw std::runtime_error("missing DIMACS header");
    if (!current.empty())
        throw std::runtime_error("unterminated DIMACS clause");
    if (cnf.clauses.size() != declared_clauses)
        throw std::runtime_error("DIMACS clause count mismatch");
    cnf.num_features = cnf.num_vars;
    return cnf;
}

} // namespace fmkit
