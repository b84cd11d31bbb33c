#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include <boost/multiprecision/cpp_int.hpp>

#include "fmkit/cnf.hpp"
#include "fmkit/detail/text.hpp"

namespace fmkit {

using BigCount = boost::multiprecision::cpp_int;

enum class SolveStatus { Satisfiable, Unsatisfiable };

/// `witness` is a total assignment over all CNF variables when Satisfiable,
/// empty otherwise.
struct SolveOutcome {
    SolveStatus status = SolveStatus::Unsatisfiable;
    std::vector<bool> witness;
};

/// External process failures, malformed solver output, and violated CNF
/// invariants discovered mid-solve.
struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool satisfies(const CnfFormula& cnf, const std::vector<bool>& witness) {
    if (witness.size() < cnf.num_vars)
        return false;
    for (const Clause& clause : cnf.clauses) {
        bool ok = false;
        for (Lit l : clause)
            if (witness[l.var()] != l.negated()) {
                ok = true;
                break;
            }
        if (!ok)
            return false;
    }
    return true;
}

namespace detail {

/// Shared assignment trail with full-scan unit propagation. Complete and
/// deterministic; built for desk-scale inputs, not industrial ones.
class DpllState {
public:
    static constexpr std::int8_t kUnassigned = -1;

    explicit DpllState(const CnfFormula& cnf)
        : cnf_(cnf), assign_(cnf.num_vars, kUnassigned) {}

    bool is_assigned(std::uint32_t var) const { return assign_[var] != kUnassigned; }

    bool is_true(Lit l) const { return assign_[l.var()] == (l.negated() ? 0 : 1); }

    /// False when the literal contradicts the current assignment.
    bool assign(Lit l) {
        std::int8_t want = l.negated() ? 0 : 1;
        std::int8_t& slot = assign_[l.var()];
        if (slot == kUnassigned) {
            slot = want;
            trail_.push_back(l.var());
            return true;
        }
        return slot == want;
    }

    std::size_t mark() const { return trail_.size(); }

    void undo_to(std::size_t mark) {
        while (trail_.size() > mark) {
            assign_[trail_.back()] = kUnassigned;
            trail_.pop_back();
        }
    }

    /// Unit propagation to fixpoint; false on conflict.
    bool propagate() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const Clause& clause : cnf_.clauses) {
                bool satisfied = false;
                std::size_t unassigned = 0;
                Lit unit{};
                for (Lit l : clause) {
                    if (is_true(l)) {
                        satisfied = true;
                        break;
                    }
                    if (!is_assigned(l.var())) {
                        ++unassigned;
                        unit = l;
                    }
                }
                if (satisfied)
                    continue;
                if (unassigned == 0)
                    return false;
                if (unassigned == 1) {
                    assign(unit);
                    changed = true;
                }
            }
        }
        return true;
    }

    std::optional<std::uint32_t> lowest_unassigned_var() const {
        for (std::uint32_t v = 0; v < cnf_.num_vars; ++v)
            if (!is_assigned(v))
                return v;
        return std::nullopt;
    }

    /// Lowest unassigned variable occurring in a clause that is not yet
    /// satisfied; empty exactly when every clause is satisfied.
    std::optional<std::uint32_t> lowest_open_var() const {
        std::optional<std::uint32_t> best;
        for (const Clause& clause : cnf_.clauses) {
            bool satisfied = false;
            for (Lit l : clause)
                if (is_true(l)) {
                    satisfied = true;
                    break;
                }
            if (satisfied)
                continue;
            for (Lit l : clause)
                if (!is_assigned(l.var()) && (!best || l.var() < *best))
                    best = l.var();
        }
        return best;
    }

    std::vector<bool> snapshot() const {
        std::vector<bool> out(cnf_.num_vars, false);
        for (std::uint32_t v = 0; v < cnf_.num_vars; ++v)
            out[v] = assign_[v] == 1;
        return out;
    }

    const CnfFormula& cnf() const { return cnf_; }

private:
    const CnfFormula& cnf_;
    std::vector<std::int8_t> assign_;
    std::vector<std::uint32_t> trail_;
};

} // namespace detail

/// Complete DPLL decision procedure. Branching is lowest unassigned variable
/// first, true before false, so outcomes and witnesses are deterministic.
class SatSolver {
public:
    explicit SatSolver(const CnfFormula& cnf) : cnf_(cnf) {}

    SolveOutcome solve(const std::vector<Lit>& assumptions = {}) const {
        detail::DpllState state(cnf_);
        for (Lit a : assumptions) {
            if (a.var() >= cnf_.num_vars)
                throw std::invalid_argument("assumption literal out of range");
            if (!state.assign(a))
                return {SolveStatus::Unsatisfiable, {}};
        }
        if (!search(state))
            return {SolveStatus::Unsatisfiable, {}};
        return {SolveStatus::Satisfiable, state.snapshot()};
    }

private:
    const CnfFormula& cnf_;

    static bool search(detail::DpllState& state) {
        if (!state.propagate())
            return false;
        std::optional<std::uint32_t> var = state.lowest_unassigned_var();
        if (!var)
            return true;
        std::size_t mark = state.mark();
        state.assign(Lit::positive(*var));
        if (search(state))
            return true;
        state.undo_to(mark);
        state.assign(Lit::negative(*var));
        if (search(state))
            return true;
        state.undo_to(mark);
        return false;
    }
};

inline SolveOutcome sat(const CnfFormula& cnf, const std::vector<Lit>& assumptions = {}) {
    return SatSolver(cnf).solve(assumptions);
}

enum class CountStatus { Exact, BudgetExhausted };

/// BudgetExhausted carries no number: a partial count is never reported.
struct CountResult {
    CountStatus status = CountStatus::Exact;
    BigCount count = 0;
};

inline constexpr std::uint64_t kDefaultCountBudget = 10'000'000;

namespace detail {

class ModelCounter {
public:
    ModelCounter(const CnfFormula& cnf, std::uint64_t node_budget)
        : state_(cnf), budget_(node_budget) {}

    CountResult run() {
        BigCount total = count(state_);
        if (exhausted_)
            return {CountStatus::BudgetExhausted, 0};
        return {CountStatus::Exact, std::move(total)};
    }

private:
    DpllState state_;
    std::uint64_t budget_;
    std::uint64_t nodes_ = 0;
    bool exhausted_ = false;

    // Counting DPLL over feature variables. At a state where every clause is
    // satisfied, each unassigned feature variable is free, contributing 2^k;
    // auxiliaries are always pinned by propagation at such states because
    // their definitions are polarity-complete.
    BigCount count(DpllState& state) {
        if (exhausted_)
            return 0;
        if (++nodes_ > budget_) {
            exhausted_ = true;
            return 0;
        }
        if (!state.propagate())
            return 0;
        std::optional<std::uint32_t> var = state.lowest_open_var();
        if (!var) {
            std::size_t free_features = 0;
            for (std::uint32_t v = 0; v < state.cnf().num_vars; ++v) {
                if (state.is_assigned(v))
                    continue;
                if (v >= state.cnf().num_features)
                    throw solver_error("auxiliary variable left undetermined; "
                                       "CNF is not a definitional encoding");
                ++free_features;
            }
            return BigCount(1) << free_features;
        }
        std::size_t mark = state.mark();
        state.assign(Lit::positive(*var));
        BigCount with = count(state);
        state.undo_to(mark);
        state.assign(Lit::negative(*var));
        BigCount without = count(state);
        state.undo_to(mark);
        return with + without;
    }
};

} // namespace detail

/// Exact number of satisfying assignments projected onto the feature
/// variables.
inline CountResult count_models(const CnfFormula& cnf,
                                std::uint64_t node_budget = kDefaultCountBudget) {
    return detail::ModelCounter(cnf, node_budget).run();
}

/// Runs `<command> <dimacs-file>` and parses the conventional solution
/// format: an `s SATISFIABLE` / `s UNSATISFIABLE` line, then `v ` literal
/// lines terminated by 0. Command defaults to $FMKIT_EXTERNAL_SOLVER.
/// Satisfiable witnesses are re-checked against the clauses.
inline SolveOutcome external_solver_hook(const CnfFormula& cnf, std::string command = "") {
    if (command.empty())
        if (const char* env = std::getenv("FMKIT_EXTERNAL_SOLVER"))
            command = env;
    if (command.empty())
        throw solver_error("no external solver configured (set FMKIT_EXTERNAL_SOLVER)");

    static std::atomic<unsigned> counter{0};
    std::filesystem::path path =
        std::filesystem::temp_directory_path() /
        ("fmkit-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".cnf");
    {
        std::ofstream out(path);
        if (!out)
            throw solver_error("cannot write DIMACS file: " + path.string());
        out << to_dimacs(cnf);
    }

    std::string cmdline = command + " " + path.string();
    FILE* pipe = ::popen(cmdline.c_str(), "r");
    if (!pipe) {
        std::filesystem::remove(path);
        throw solver_error("failed to start external solver: " + command);
    }
    std::string output;
    char buffer[4096];
    std::size_t got;
    while ((got = std::fread(buffer, 1, sizeof buffer, pipe)) > 0)
        output.append(buffer, got);
    int rc = ::pclose(pipe);
    std::error_code ignored;
    std::filesystem::remove(path, ignored);

    std::optional<SolveStatus> status;
    std::vector<Lit> lits;
    for (const std::string& line : detail::split_lines(output)) {
        std::string_view t = detail::trim(line);
        if (t.rfind("s ", 0) == 0) {
            std::string_view verdict = detail::trim(t.substr(2));
            if (verdict == "SATISFIABLE")
                status = SolveStatus::Satisfiable;
            else if (verdict == "UNSATISFIABLE")
                status = SolveStatus::Unsatisfiable;
            else
                throw solver_error("malformed solver status line: " + std::string(t));
        } else if (t.rfind("v ", 0) == 0) {
            for (const std::string& tok : detail::split_whitespace(t.substr(2))) {
                char* end = nullptr;
                long value = std::strtol(tok.c_str(), &end, 10);
                if (end == tok.c_str() || *end != '\0')
                    throw solver_error("malformed solver witness token: " + tok);
                if (value == 0)
                    break;
                lits.push_back(Lit::from_dimacs(static_cast<int>(value)));
            }
        }
    }
    if (!status)
        throw solver_error("external solver produced no status line (exit code " +
                           std::to_string(rc) + ")");
    if (*status == SolveStatus::Unsatisfiable)
        return {SolveStatus::Unsatisfiable, {}};

    std::vector<bool> witness(cnf.num_vars, false);
    for (Lit l : lits) {
        if (l.var() >= cnf.num_vars)
            throw solver_error("external solver witness variable out of range");
        witness[l.var()] = !l.negated();
    }
    if (!satisfies(cnf, witness))
        throw solver_error("external solver witness does not satisfy the formula");
    return {SolveStatus::Satisfiable, std::move(witness)};
}

} // namespace fmkit
