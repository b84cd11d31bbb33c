// Standalone DIMACS SAT solver. Reads one CNF file, prints an "s" status
// line and, when satisfiable, a "v" assignment line. Exit codes follow the
// usual solver convention: 10 satisfiable, 20 unsatisfiable, 1 on error.

#include <cstdio>
#include <iostream>
#include <string>

#include "fmkit/cnf.hpp"
#include "fmkit/detail/io.hpp"
#include "fmkit/solver.hpp"

int main(int argc, char** argv) {
    bool garble = false;
    std::string path;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--garble")
            garble = true;
        else if (path.empty())
            path = arg;
        else {
            std::cerr << "usage: fmkit-sat [--garble] <dimacs-file>\n";
            return 1;
        }
    }
    if (path.empty()) {
        std::cerr << "usage: fmkit-sat [--garble] <dimacs-file>\n";
        return 1;
    }
    if (garble) {
        // Deliberately malformed output, used to exercise callers that must
        // reject solvers they cannot parse.
        std::cout << "hello, this is not a solver result\n";
        return 0;
    }

    try {
        fmkit::CnfFormula cnf = fmkit::parse_dimacs(fmkit::detail::read_file(path));
        fmkit::SolveOutcome outcome = fmkit::sat(cnf);
        if (outcome.status == fmkit::SolveStatus::Unsatisfiable) {
            std::cout << "s UNSATISFIABLE\n";
            return 20;
        }
        std::cout << "s SATISFIABLE\nv";
        for (std::uint32_t v = 0; v < cnf.num_vars; ++v)
            std::cout << ' ' << (outcome.witness[v] ? 1 : -1) * (static_cast<int>(v) + 1);
        std::cout << " 0\n";
        return 10;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
