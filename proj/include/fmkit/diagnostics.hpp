#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fmkit {

struct Diagnostic {
    std::size_t line = 0;
    std::size_t column = 0;
    std::string message;
};

/// Carries every diagnostic collected over a document; what() formats the
/// first one.
class parse_error : public std::runtime_error {
public:
    explicit parse_error(std::vector<Diagnostic> diags)
        : std::runtime_error(format_first(diags)), diagnostics_(std::move(diags)) {}

    parse_error(std::size_t line, std::size_t column, const std::string& message)
        : parse_error(std::vector<Diagnostic>{Diagnostic{line, column, message}}) {}

    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    static std::string format_first(const std::vector<Diagnostic>& diags) {
        if (diags.empty())
            return "parse error";
        std::string msg = "line " + std::to_string(diags.front().line) + ", col " +
                          std::to_string(diags.front().column) + ": " + diags.front().message;
        if (diags.size() > 1)
            msg += " (and " + std::to_string(diags.size() - 1) + " more)";
        return msg;
    }

    std::vector<Diagnostic> diagnostics_;
};

} // namespace fmkit
