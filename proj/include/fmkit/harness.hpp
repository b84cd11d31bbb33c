#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fmkit/analysis.hpp"
#include "fmkit/blueprint.hpp"
#include "fmkit/core.hpp"
#include "fmkit/detail/io.hpp"
#include "fmkit/detail/text.hpp"

namespace fmkit {

// ---------------------------------------------------------------------------
// Output contract

/// XML element carrying the answer for each operation.
inline std::string ao_answer_tag(AoKind ao) {
    switch (ao) {
    case AoKind::AO10: return "satisfiable";
    case AoKind::AO11: return "configuration_satisfiable";
    case AoKind::AO12: return "valid_configurations";
    case AoKind::AO13: return "core_features";
    case AoKind::AO14: return "dead_features";
    case AoKind::AO15: return "false_optional_features";
    case AoKind::AO16: return "generalization";
    default: return "count";
    }
}

struct ParsedAnswer {
    enum class Status { Parsed, Unparseable, PartialTruncated };
    Status status = Status::Unparseable;
    std::optional<AoResult> result;
};

namespace detail {

/// Digits only, with whitespace and thousands separators stripped; empty on
/// any other character.
inline std::string extract_integer_body(std::string_view body) {
    std::string digits;
    for (char c : body) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ',')
            continue;
        if (c < '0' || c > '9')
            return "";
        digits.push_back(c);
    }
    return digits;
}

} // namespace detail

/// Finds the operation's contract element anywhere in the raw text and reads
/// its body. An opening tag without its closing tag is truncation; a missing
/// tag or malformed body is unparseable. Never throws.
inline ParsedAnswer parse_answer(AoKind ao, std::string_view raw) {
    std::string tag = ao_answer_tag(ao);
    std::string open = "<" + tag + ">";
    std::string close = "</" + tag + ">";
    std::size_t begin = raw.find(open);
    if (begin == std::string_view::npos)
        return {ParsedAnswer::Status::Unparseable, std::nullopt};
    std::size_t body_at = begin + open.size();
    std::size_t end = raw.find(close, body_at);
    if (end == std::string_view::npos)
        return {ParsedAnswer::Status::PartialTruncated, std::nullopt};
    std::string_view body = raw.substr(body_at, end - body_at);

    AoResult result;
    result.kind = ao;
    switch (ao) {
    case AoKind::AO10:
    case AoKind::AO11:
    case AoKind::AO16: {
        std::string_view t = detail::trim(body);
        if (t == "true")
            result.value = true;
        else if (t == "false")
            result.value = false;
        else
            return {ParsedAnswer::Status::Unparseable, std::nullopt};
        break;
    }
    case AoKind::AO12: {
        std::string digits = detail::extract_integer_body(body);
        if (digits.empty())
            return {ParsedAnswer::Status::Unparseable, std::nullopt};
        result.value = BigCount(digits);
        break;
    }
    case AoKind::AO13:
    case AoKind::AO14:
    case AoKind::AO15: {
        FeatureSet names;
        for (const std::string& line : detail::split_lines(body)) {
            std::string_view t = detail::trim(line);
            if (!t.empty())
                names.insert(std::string(t));
        }
        result.value = std::move(names);
        break;
    }
    default: {
        std::string digits = detail::extract_integer_body(body);
        if (digits.empty())
            return {ParsedAnswer::Status::Unparseable, std::nullopt};
        try {
            result.value = static_cast<std::uint64_t>(std::stoull(digits));
        } catch (const std::exception&) {
            return {ParsedAnswer::Status::Unparseable, std::nullopt};
        }
        break;
    }
    }
    return {ParsedAnswer::Status::Parsed, std::move(result)};
}

/// Verbatim <rationale> body, empty when absent or unclosed.
inline std::string extract_rationale(std::string_view raw) {
    std::size_t begin = raw.find("<rationale>");
    if (begin == std::string_view::npos)
        return "";
    begin += std::string_view("<rationale>").size();
    std::size_t end = raw.find("</rationale>", begin);
    if (end == std::string_view::npos)
        return "";
    return std::string(detail::trim(raw.substr(begin, end - begin)));
}

// ---------------------------------------------------------------------------
// Scoring

enum class FailureMode { None, Unparseable, FormatCorrectButWrong, PartialTruncated, HallucinatedElements };

inline std::string to_string(FailureMode mode) {
    switch (mode) {
    case FailureMode::None: return "none";
    case FailureMode::Unparseable: return "unparseable";
    case FailureMode::FormatCorrectButWrong: return "format_correct_but_wrong";
    case FailureMode::PartialTruncated: return "partial_truncated";
    case FailureMode::HallucinatedElements: return "hallucinated_elements";
    }
    return "none";
}

inline std::optional<FailureMode> failure_from_string(std::string_view text) {
    for (FailureMode m : {FailureMode::None, FailureMode::Unparseable,
                          FailureMode::FormatCorrectButWrong, FailureMode::PartialTruncated,
                          FailureMode::HallucinatedElements})
        if (to_string(m) == text)
            return m;
    return std::nullopt;
}

struct Verdict {
    bool correct = false;
    FailureMode failure = FailureMode::None;
};

/// Exact-match scoring with fixed failure precedence: Unparseable >
/// PartialTruncated > HallucinatedElements > FormatCorrectButWrong.
inline Verdict score(AoKind ao, const ParsedAnswer& answer, const AoResult& oracle,
                     const FeatureModel& fm) {
    if (oracle.kind != ao)
        throw std::invalid_argument("oracle result does not answer this operation");
    if (answer.result && answer.result->kind != ao)
        throw std::invalid_argument("parsed answer does not answer this operation");
    if (answer.status == ParsedAnswer::Status::Unparseable)
        return {false, FailureMode::Unparseable};
    if (answer.status == ParsedAnswer::Status::PartialTruncated)
        return {false, FailureMode::PartialTruncated};
    const AoResult& got = *answer.result;
    if (got.value_equals(oracle))
        return {true, FailureMode::None};
    if (std::holds_alternative<FeatureSet>(got.value))
        for (const std::string& name : std::get<FeatureSet>(got.value))
            if (!fm.find_feature(name))
                return {false, FailureMode::HallucinatedElements};
    return {false, FailureMode::FormatCorrectButWrong};
}

// ---------------------------------------------------------------------------
// Prompt templates

struct Exemplar {
    std::string blueprint_text;
    std::string answer_xml;
};

/// Per-operation prompt pack: system/user templates, the step-by-step
/// procedure, and 2-4 worked exemplars whose answers obey the output
/// contract.
struct PromptTemplate {
    AoKind ao = AoKind::AO1;
    std::string system_text;
    std::string user_text;
    std::string procedure_text;
    std::vector<Exemplar> exemplars;
};

/// Loads prompts/<AO-code>/{system,user,procedure}.txt and exemplars/
/// NN_blueprint.txt + NN_answer.txt pairs, then validates placeholders and
/// exemplar answers.
inline PromptTemplate load_prompt_template(const std::filesystem::path& prompts_dir, AoKind ao) {
    PromptTemplate tmpl;
    tmpl.ao = ao;
    std::filesystem::path base = prompts_dir / to_string(ao);
    tmpl.system_text = detail::read_file(base / "system.txt");
    tmpl.user_text = detail::read_file(base / "user.txt");
    tmpl.procedure_text = detail::read_file(base / "procedure.txt");

    std::filesystem::path exemplar_dir = base / "exemplars";
    std::vector<std::filesystem::path> blueprint_files;
    if (std::filesystem::is_directory(exemplar_dir))
        for (const auto& entry : std::filesystem::directory_iterator(exemplar_dir)) {
            std::string name = entry.path().filename().string();
            if (name.size() > 14 && name.substr(name.size() - 14) == "_blueprint.txt")
                blueprint_files.push_back(entry.path());
        }
    std::sort(blueprint_files.begin(), blueprint_files.end());
    for (const std::filesystem::path& bp_path : blueprint_files) {
        std::string stem = bp_path.filename().string();
        stem = stem.substr(0, stem.size() - std::string("_blueprint.txt").size());
        Exemplar ex;
        ex.blueprint_text = detail::read_file(bp_path);
        ex.answer_xml = detail::read_file(exemplar_dir / (stem + "_answer.txt"));
        tmpl.exemplars.push_back(std::move(ex));
    }

    if (tmpl.exemplars.size() < 2 || tmpl.exemplars.size() > 4)
        throw std::runtime_error("template " + to_string(ao) + " needs 2-4 exemplars, found " +
                                 std::to_string(tmpl.exemplars.size()));
    std::vector<std::string> required{"{{examples}}", "{{procedure}}", "{{blueprint}}"};
    if (ao == AoKind::AO11)
        required.push_back("{{configuration}}");
    for (const std::string& placeholder : required)
        if (tmpl.user_text.find(placeholder) == std::string::npos)
            throw std::runtime_error("template " + to_string(ao) + " user text is missing " +
                                     placeholder);
    for (std::size_t i = 0; i < tmpl.exemplars.size(); ++i)
        if (parse_answer(ao, tmpl.exemplars[i].answer_xml).status !=
            ParsedAnswer::Status::Parsed)
            throw std::runtime_error("template " + to_string(ao) + " exemplar " +
                                     std::to_string(i + 1) +
                                     " answer violates the output contract");
    return tmpl;
}

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;
};

namespace detail {

inline std::string render_exemplars(const std::vector<Exemplar>& exemplars) {
    std::string out;
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        if (i)
            out += "\n";
        out += "Example " + std::to_string(i + 1) + ":\nBlueprint:\n" +
               exemplars[i].blueprint_text + "\nAnswer:\n" + exemplars[i].answer_xml + "\n";
    }
    return out;
}

inline RenderedPrompt substitute_prompt(const PromptTemplate& tmpl,
                                        const std::string& blueprint_payload,
                                        const std::string& configuration_payload) {
    auto fill = [&](std::string text) {
        text = replace_all(std::move(text), "{{examples}}", render_exemplars(tmpl.exemplars));
        text = replace_all(std::move(text), "{{procedure}}", tmpl.procedure_text);
        text = replace_all(std::move(text), "{{blueprint}}", blueprint_payload);
        text = replace_all(std::move(text), "{{configuration}}", configuration_payload);
        return text;
    };
    return {fill(tmpl.system_text), fill(tmpl.user_text)};
}

} // namespace detail

/// Renders a configuration the way prompts list it: completeness line, then
/// name-sorted selected and deselected lines.
inline std::string render_configuration_listing(const FeatureModel& fm,
                                                const Configuration& config) {
    auto names = [&](const std::set<FeatureId>& ids) {
        std::set<std::string> sorted;
        for (FeatureId id : ids)
            sorted.insert(fm.feature_name(id));
        std::string out;
        for (const std::string& n : sorted) {
            if (!out.empty())
                out += ", ";
            out += n;
        }
        return out.empty() ? std::string("(none)") : out;
    };
    std::string text = "completeness: ";
    text += config.completeness == Completeness::Full ? "full" : "partial";
    text += "\nselected: " + names(config.selected);
    text += "\ndeselected: " + names(config.deselected);
    return text;
}

/// Plain substitution for every operation without extra inputs.
inline RenderedPrompt render_prompts(const PromptTemplate& tmpl,
                                     const std::string& blueprint_text) {
    if (tmpl.ao == AoKind::AO11)
        throw std::invalid_argument("AO11 prompts need a configuration");
    if (tmpl.ao == AoKind::AO16)
        throw std::invalid_argument("AO16 prompts need a second blueprint");
    return detail::substitute_prompt(tmpl, blueprint_text, "");
}

/// AO11: the configuration listing is injected alongside the blueprint.
inline RenderedPrompt render_prompts(const PromptTemplate& tmpl,
                                     const std::string& blueprint_text, const FeatureModel& fm,
                                     const Configuration& config) {
    if (tmpl.ao != AoKind::AO11)
        throw std::invalid_argument("configuration input is only valid for AO11 prompts");
    return detail::substitute_prompt(tmpl, blueprint_text,
                                     render_configuration_listing(fm, config));
}

/// AO16: both blueprints are injected, labeled GENERAL-CANDIDATE and
/// SPECIAL-CANDIDATE.
inline RenderedPrompt render_prompts(const PromptTemplate& tmpl,
                                     const std::string& special_blueprint_text,
                                     const std::string& general_blueprint_text) {
    if (tmpl.ao != AoKind::AO16)
        throw std::invalid_argument("second blueprint input is only valid for AO16 prompts");
    std::string payload = "GENERAL-CANDIDATE:\n" + general_blueprint_text +
                          "\nSPECIAL-CANDIDATE:\n" + special_blueprint_text;
    return detail::substitute_prompt(tmpl, payload, "");
}

// ---------------------------------------------------------------------------
// Providers

struct ProviderConfig {
    std::string model_id;
    std::string family;
    std::string endpoint;
    std::string auth_env;
    std::string auth_style = "bearer";
    double temperature = 0.0;
    std::optional<std::uint64_t> max_output_tokens;
    double request_timeout_s = 120.0;
};

enum class TransportStatus { Ok, Timeout, HttpError };

inline std::string to_string(TransportStatus status) {
    switch (status) {
    case TransportStatus::Ok: return "ok";
    case TransportStatus::Timeout: return "timeout";
    case TransportStatus::HttpError: return "http_error";
    }
    return "ok";
}

inline std::optional<TransportStatus> transport_from_string(std::string_view text) {
    for (TransportStatus s :
         {TransportStatus::Ok, TransportStatus::Timeout, TransportStatus::HttpError})
        if (to_string(s) == text)
            return s;
    return std::nullopt;
}

/// One request/response pair with usage accounting.
struct LlmExchange {
    std::string system_text;
    std::string user_text;
    std::string response_text;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    double wall_time_s = 0.0;
    TransportStatus status = TransportStatus::Ok;
    int http_code = 0;
};

class ProviderClient {
public:
    virtual ~ProviderClient() = default;
    virtual LlmExchange complete(const ProviderConfig& config,
                                 const std::string& blueprint_name, AoKind ao,
                                 const std::string& system_text,
                                 const std::string& user_text) = 0;
};

/// Loads the model roster. Temperature must be 0 on every entry.
inline std::vector<ProviderConfig> load_model_configs(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw io_error("cannot parse model config " + path.string() + ": " + e.what());
    }
    std::vector<ProviderConfig> out;
    for (const nlohmann::json& entry : doc.at("models")) {
        ProviderConfig cfg;
        cfg.model_id = entry.at("model_id").get<std::string>();
        cfg.family = entry.value("family", "");
        cfg.endpoint = entry.value("endpoint", "");
        cfg.auth_env = entry.value("auth_env", "");
        cfg.auth_style = entry.value("auth_style", "bearer");
        cfg.temperature = entry.value("temperature", 0.0);
        if (entry.contains("max_output_tokens"))
            cfg.max_output_tokens = entry.at("max_output_tokens").get<std::uint64_t>();
        cfg.request_timeout_s = entry.value("request_timeout_s", 120.0);
        if (cfg.temperature != 0.0)
            throw std::runtime_error("model " + cfg.model_id +
                                     ": study-mode runs require temperature 0");
        out.push_back(std::move(cfg));
    }
    return out;
}

inline std::map<std::string, std::string>
family_map(const std::vector<ProviderConfig>& configs) {
    std::map<std::string, std::string> out;
    for (const ProviderConfig& cfg : configs)
        out[cfg.model_id] = cfg.family;
    return out;
}

/// Offline provider returning canned responses keyed by (model, blueprint,
/// AO). Token counts are synthetic whitespace counts; wall time is zero; a
/// missing fixture surfaces as an HTTP error on the triple.
class MockProvider : public ProviderClient {
public:
    MockProvider() = default;
    MockProvider(MockProvider&& other) noexcept
        : fixtures_(std::move(other.fixtures_)), calls_(other.calls_.load()) {}
    MockProvider& operator=(MockProvider&& other) noexcept {
        fixtures_ = std::move(other.fixtures_);
        calls_.store(other.calls_.load());
        return *this;
    }

    void add_fixture(const std::string& model_id, const std::string& blueprint_name, AoKind ao,
                     std::string response) {
        fixtures_[key(model_id, blueprint_name, ao)] = std::move(response);
    }

    static MockProvider from_json_file(const std::filesystem::path& path) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(detail::read_file(path));
        } catch (const nlohmann::json::exception& e) {
            throw io_error("cannot parse mock fixtures " + path.string() + ": " + e.what());
        }
        MockProvider provider;
        for (const nlohmann::json& entry : doc.at("responses")) {
            std::optional<AoKind> ao = ao_from_string(entry.at("ao").get<std::string>());
            if (!ao)
                throw std::runtime_error("mock fixture with unknown AO code");
            provider.add_fixture(entry.at("model").get<std::string>(),
                                 entry.at("blueprint").get<std::string>(), *ao,
                                 entry.at("response").get<std::string>());
        }
        return provider;
    }

    std::size_t calls() const { return calls_.load(); }

    LlmExchange complete(const ProviderConfig& config, const std::string& blueprint_name,
                         AoKind ao, const std::string& system_text,
                         const std::string& user_text) override {
        calls_.fetch_add(1);
        LlmExchange ex;
        ex.system_text = system_text;
        ex.user_text = user_text;
        ex.prompt_tokens = token_count(system_text) + token_count(user_text);
        auto it = fixtures_.find(key(config.model_id, blueprint_name, ao));
        if (it == fixtures_.end()) {
            ex.status = TransportStatus::HttpError;
            ex.http_code = 404;
            return ex;
        }
        ex.response_text = it->second;
        ex.completion_tokens = token_count(ex.response_text);
        return ex;
    }

private:
    static std::string key(const std::string& model_id, const std::string& blueprint_name,
                           AoKind ao) {
        return model_id + "\x1f" + blueprint_name + "\x1f" + to_string(ao);
    }

    std::map<std::string, std::string> fixtures_;
    std::atomic<std::size_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Run records

inline constexpr int kRecordSchemaVersion = 1;

struct RunRecord {
    int schema_version = kRecordSchemaVersion;
    std::string model_id;
    std::string blueprint_name;
    AoKind ao = AoKind::AO1;
    LlmExchange exchange;
    std::optional<AoResult> parsed;
    AoResult oracle;
    bool correct = false;
    FailureMode failure = FailureMode::None;
    std::string rationale;
};

inline nlohmann::json ao_result_to_json(const AoResult& r) {
    nlohmann::json j;
    j["kind"] = to_string(r.kind);
    if (std::holds_alternative<std::uint64_t>(r.value)) {
        j["type"] = "count";
        j["value"] = std::get<std::uint64_t>(r.value);
    } else if (std::holds_alternative<bool>(r.value)) {
        j["type"] = "bool";
        j["value"] = std::get<bool>(r.value);
    } else if (std::holds_alternative<BigCount>(r.value)) {
        j["type"] = "big_count";
        j["value"] = std::get<BigCount>(r.value).str();
    } else {
        j["type"] = "feature_set";
        j["value"] = std::get<FeatureSet>(r.value);
    }
    j["void_model"] = r.void_model;
    j["not_computed"] = r.not_computed;
    return j;
}

inline AoResult ao_result_from_json(const nlohmann::json& j) {
    AoResult r;
    std::optional<AoKind> kind = ao_from_string(j.at("kind").get<std::string>());
    if (!kind)
        throw std::runtime_error("record with unknown AO kind");
    r.kind = *kind;
    std::string type = j.at("type").get<std::string>();
    if (type == "count")
        r.value = j.at("value").get<std::uint64_t>();
    else if (type == "bool")
        r.value = j.at("value").get<bool>();
    else if (type == "big_count")
        r.value = BigCount(j.at("value").get<std::string>());
    else if (type == "feature_set")
        r.value = j.at("value").get<FeatureSet>();
    else
        throw std::runtime_error("record with unknown result type: " + type);
    r.void_model = j.value("void_model", false);
    r.not_computed = j.value("not_computed", false);
    return r;
}

inline nlohmann::json record_to_json(const RunRecord& record) {
    nlohmann::json j;
    j["schema_version"] = record.schema_version;
    j["model_id"] = record.model_id;
    j["blueprint"] = record.blueprint_name;
    j["ao"] = to_string(record.ao);
    j["request"] = {{"system", record.exchange.system_text},
                    {"user", record.exchange.user_text}};
    j["response_text"] = record.exchange.response_text;
    j["prompt_tokens"] = record.exchange.prompt_tokens;
    j["completion_tokens"] = record.exchange.completion_tokens;
    j["wall_time_s"] = record.exchange.wall_time_s;
    j["transport"] = to_string(record.exchange.status);
    j["http_code"] = record.exchange.http_code;
    j["parsed"] = record.parsed ? ao_result_to_json(*record.parsed) : nlohmann::json(nullptr);
    j["oracle"] = ao_result_to_json(record.oracle);
    j["correct"] = record.correct;
    j["failure"] = to_string(record.failure);
    j["rationale"] = record.rationale;
    return j;
}

inline RunRecord record_from_json(const nlohmann::json& j) {
    RunRecord record;
    record.schema_version = j.at("schema_version").get<int>();
    if (record.schema_version != kRecordSchemaVersion)
        throw std::runtime_error("unsupported record schema version " +
                                 std::to_string(record.schema_version));
    record.model_id = j.at("model_id").get<std::string>();
    record.blueprint_name = j.at("blueprint").get<std::string>();
    std::optional<AoKind> ao = ao_from_string(j.at("ao").get<std::string>());
    if (!ao)
        throw std::runtime_error("record with unknown AO code");
    record.ao = *ao;
    record.exchange.system_text = j.at("request").at("system").get<std::string>();
    record.exchange.user_text = j.at("request").at("user").get<std::string>();
    record.exchange.response_text = j.at("response_text").get<std::string>();
    record.exchange.prompt_tokens = j.at("prompt_tokens").get<std::uint64_t>();
    record.exchange.completion_tokens = j.at("completion_tokens").get<std::uint64_t>();
    record.exchange.wall_time_s = j.at("wall_time_s").get<double>();
    std::optional<TransportStatus> transport =
        transport_from_string(j.at("transport").get<std::string>());
    if (!transport)
        throw std::runtime_error("record with unknown transport status");
    record.exchange.status = *transport;
    record.exchange.http_code = j.at("http_code").get<int>();
    if (!j.at("parsed").is_null())
        record.parsed = ao_result_from_json(j.at("parsed"));
    record.oracle = ao_result_from_json(j.at("oracle"));
    record.correct = j.at("correct").get<bool>();
    std::optional<FailureMode> failure =
        failure_from_string(j.at("failure").get<std::string>());
    if (!failure)
        throw std::runtime_error("record with unknown failure mode");
    record.failure = *failure;
    record.rationale = j.value("rationale", "");
    return record;
}

/// Reads a line-delimited records file; any malformed line is an error.
inline std::vector<RunRecord> load_records(const std::filesystem::path& path) {
    std::vector<RunRecord> out;
    std::string content = detail::read_file(path);
    std::vector<std::string> lines = detail::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::trim(lines[i]).empty())
            continue;
        try {
            out.push_back(record_from_json(nlohmann::json::parse(lines[i])));
        } catch (const std::exception& e) {
            throw io_error("corrupt records file " + path.string() + " at line " +
                           std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Matrix runner

/// One evaluation subject: the blueprint, its resolved model, and the extra
/// inputs for AO11/AO16 when those operations are requested.
struct EvalBlueprint {
    std::string name;
    std::string text;
    FeatureModel model;
    std::optional<Configuration> ao11_config;
    std::optional<std::string> ao16_general_text;
    std::optional<FeatureModel> ao16_general_model;
};

struct MatrixOptions {
    std::size_t concurrency = 4;
    std::filesystem::path prompts_dir = "prompts";
    std::uint64_t count_budget = kDefaultCountBudget;
};

struct MatrixSummary {
    std::size_t new_records = 0;
    std::size_t skipped = 0;
};

/// Executes every (model, blueprint, AO) triple once, appending records to
/// `records_path` as they complete. Triples already present in the file are
/// skipped, which makes an interrupted run resumable without duplicate
/// provider calls. Provider failures are recorded, not fatal; a storage
/// write failure aborts.
inline MatrixSummary run_matrix(const std::vector<ProviderConfig>& models,
                                const std::vector<EvalBlueprint>& blueprints,
                                const std::vector<AoKind>& aos, ProviderClient& provider,
                                const std::filesystem::path& records_path,
                                const MatrixOptions& options = {}) {
    for (AoKind ao : aos)
        for (const EvalBlueprint& bp : blueprints) {
            if (ao == AoKind::AO11 && !bp.ao11_config)
                throw std::invalid_argument("blueprint " + bp.name +
                                            " has no configuration for AO11");
            if (ao == AoKind::AO16 && (!bp.ao16_general_model || !bp.ao16_general_text))
                throw std::invalid_argument("blueprint " + bp.name +
                                            " has no general candidate for AO16");
        }

    std::map<std::string, PromptTemplate> templates;
    for (AoKind ao : aos)
        templates.emplace(to_string(ao), load_prompt_template(options.prompts_dir, ao));

    // The oracle is computed once per (blueprint, AO); failures here abort
    // before any provider traffic.
    std::map<std::pair<std::string, std::string>, AoResult> oracles;
    for (const EvalBlueprint& bp : blueprints)
        for (AoKind ao : aos) {
            AoExtras extras;
            extras.count_budget = options.count_budget;
            if (ao == AoKind::AO11)
                extras.config = bp.ao11_config;
            if (ao == AoKind::AO16)
                extras.pair_general = &*bp.ao16_general_model;
            oracles.emplace(std::make_pair(bp.name, to_string(ao)),
                            run_ao(ao, bp.model, extras));
        }

    std::set<std::string> completed;
    if (std::filesystem::exists(records_path))
        for (const RunRecord& record : load_records(records_path))
            completed.insert(record.model_id + "\x1f" + record.blueprint_name + "\x1f" +
                             to_string(record.ao));

    struct Triple {
        const ProviderConfig* model;
        const EvalBlueprint* blueprint;
        AoKind ao;
    };
    std::vector<Triple> todo;
    std::size_t skipped = 0;
    for (const ProviderConfig& model : models)
        for (const EvalBlueprint& bp : blueprints)
            for (AoKind ao : aos) {
                if (completed.count(model.model_id + "\x1f" + bp.name + "\x1f" + to_string(ao)))
                    ++skipped;
                else
                    todo.push_back(Triple{&model, &bp, ao});
            }

    std::ofstream out(records_path, std::ios::app | std::ios::binary);
    if (!out)
        throw io_error("cannot open records file for append: " + records_path.string());

    std::mutex write_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> write_failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= todo.size() || write_failed.load())
                return;
            const Triple& triple = todo[i];
            try {
                const PromptTemplate& tmpl = templates.at(to_string(triple.ao));
                RenderedPrompt prompt;
                if (triple.ao == AoKind::AO11)
                    prompt = render_prompts(tmpl, triple.blueprint->text,
                                            triple.blueprint->model,
                                            *triple.blueprint->ao11_config);
                else if (triple.ao == AoKind::AO16)
                    prompt = render_prompts(tmpl, triple.blueprint->text,
                                            *triple.blueprint->ao16_general_text);
                else
                    prompt = render_prompts(tmpl, triple.blueprint->text);

                auto start = std::chrono::steady_clock::now();
                LlmExchange exchange =
                    provider.complete(*triple.model, triple.blueprint->name, triple.ao,
                                      prompt.system_text, prompt.user_text);
                auto stop = std::chrono::steady_clock::now();
                if (exchange.wall_time_s == 0.0)
                    exchange.wall_time_s =
                        std::chrono::duration<double>(stop - start).count();

                RunRecord record;
                record.model_id = triple.model->model_id;
                record.blueprint_name = triple.blueprint->name;
                record.ao = triple.ao;
                record.exchange = std::move(exchange);
                record.oracle =
                    oracles.at(std::make_pair(triple.blueprint->name, to_string(triple.ao)));
                // Whatever text arrived is evaluated as produced, timeouts
                // and HTTP failures included.
                ParsedAnswer answer = parse_answer(triple.ao, record.exchange.response_text);
                if (answer.status == ParsedAnswer::Status::Parsed)
                    record.parsed = answer.result;
                Verdict verdict =
                    score(triple.ao, answer, record.oracle, triple.blueprint->model);
                record.correct = verdict.correct;
                record.failure = verdict.failure;
                record.rationale = extract_rationale(record.exchange.response_text);

                std::string line = record_to_json(record).dump();
                std::lock_guard<std::mutex> lock(write_mutex);
                out << line << "\n";
                out.flush();
                if (!out)
                    write_failed.store(true);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                write_failed.store(true);
            }
        }
    };

    std::size_t threads = std::max<std::size_t>(1, options.concurrency);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back(worker);
    for (std::thread& t : pool)
        t.join();

    if (first_error)
        std::rethrow_exception(first_error);
    if (write_failed.load())
        throw io_error("failed writing records file: " + records_path.string());
    return MatrixSummary{todo.size(), skipped};
}

// ---------------------------------------------------------------------------
// Aggregation

struct CellStats {
    std::size_t attempts = 0;
    std::size_t correct = 0;

    double accuracy_percent() const {
        return attempts == 0 ? 0.0 : 100.0 * static_cast<double>(correct) /
                                         static_cast<double>(attempts);
    }
};

struct ModelStats {
    CellStats overall;
    double total_wall_time_s = 0.0;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;

    double mean_wall_time_s() const {
        return overall.attempts == 0 ? 0.0
                                     : total_wall_time_s /
                                           static_cast<double>(overall.attempts);
    }
};

struct EvalReport {
    std::size_t total_records = 0;
    std::map<std::string, std::map<std::string, CellStats>> by_model_ao;
    std::map<std::string, std::map<std::string, CellStats>> by_model_blueprint;
    std::map<std::string, ModelStats> by_model;
    std::map<std::string, double> family_accuracy;
    std::map<std::string, std::map<std::string, std::map<std::string, std::size_t>>>
        failures_by_model_ao;
};

/// Folds records into every report table. Family averages weight each model
/// equally regardless of attempt counts.
inline EvalReport aggregate(const std::vector<RunRecord>& records,
                            const std::map<std::string, std::string>& model_families = {}) {
    EvalReport report;
    report.total_records = records.size();
    for (const RunRecord& record : records) {
        std::string ao = to_string(record.ao);
        CellStats& ao_cell = report.by_model_ao[record.model_id][ao];
        ++ao_cell.attempts;
        CellStats& bp_cell = report.by_model_blueprint[record.model_id][record.blueprint_name];
        ++bp_cell.attempts;
        ModelStats& model = report.by_model[record.model_id];
        ++model.overall.attempts;
        if (record.correct) {
            ++ao_cell.correct;
            ++bp_cell.correct;
            ++model.overall.correct;
        }
        model.total_wall_time_s += record.exchange.wall_time_s;
        model.prompt_tokens += record.exchange.prompt_tokens;
        model.completion_tokens += record.exchange.completion_tokens;
        if (record.failure != FailureMode::None)
            ++report.failures_by_model_ao[record.model_id][ao][to_string(record.failure)];
    }

    std::map<std::string, std::vector<double>> per_family;
    for (const auto& [model_id, stats] : report.by_model) {
        auto it = model_families.find(model_id);
        std::string family = it == model_families.end() || it->second.empty() ? "unknown"
                                                                              : it->second;
        per_family[family].push_back(stats.overall.accuracy_percent());
    }
    for (const auto& [family, values] : per_family) {
        double sum = 0;
        for (double v : values)
            sum += v;
        report.family_accuracy[family] = sum / static_cast<double>(values.size());
    }
    return report;
}

/// CSV with one row per model and one accuracy column per AO; cells without
/// attempts print "-".
inline std::string render_ao_csv(const EvalReport& report) {
    std::string out = "model";
    for (AoKind ao : all_aos())
        out += "," + to_string(ao);
    out += "\n";
    for (const auto& [model_id, cells] : report.by_model_ao) {
        out += model_id;
        for (AoKind ao : all_aos()) {
            auto it = cells.find(to_string(ao));
            out += ",";
            out += it == cells.end() ? "-"
                                     : detail::format_fixed(it->second.accuracy_percent(), 2);
        }
        out += "\n";
    }
    return out;
}

/// CSV with one row per model and one accuracy column per blueprint.
inline std::string render_blueprint_csv(const EvalReport& report) {
    std::set<std::string> blueprint_names;
    for (const auto& [model_id, cells] : report.by_model_blueprint)
        for (const auto& [name, stats] : cells)
            blueprint_names.insert(name);
    std::string out = "model";
    for (const std::string& name : blueprint_names)
        out += "," + name;
    out += "\n";
    for (const auto& [model_id, cells] : report.by_model_blueprint) {
        out += model_id;
        for (const std::string& name : blueprint_names) {
            auto it = cells.find(name);
            out += ",";
            out += it == cells.end() ? "-"
                                     : detail::format_fixed(it->second.accuracy_percent(), 2);
        }
        out += "\n";
    }
    return out;
}

/// Deterministic plain-text roll-up: per-model accuracy, cost accounting,
/// family averages, and failure-mode tallies.
inline std::string render_summary(const EvalReport& report) {
    std::string out = "records: " + std::to_string(report.total_records) + "\n";
    out += "models: " + std::to_string(report.by_model.size()) + "\n\n";

    out += "per-model accuracy:\n";
    for (const auto& [model_id, stats] : report.by_model) {
        out += "  " + model_id + ": " +
               detail::format_fixed(stats.overall.accuracy_percent(), 2) + "% (" +
               std::to_string(stats.overall.correct) + "/" +
               std::to_string(stats.overall.attempts) + "), mean wall " +
               detail::format_fixed(stats.mean_wall_time_s(), 3) + "s, prompt tokens " +
               std::to_string(stats.prompt_tokens) + ", completion tokens " +
               std::to_string(stats.completion_tokens) + "\n";
    }

    out += "\nfamily averages:\n";
    for (const auto& [family, accuracy] : report.family_accuracy)
        out += "  " + family + ": " + detail::format_fixed(accuracy, 2) + "%\n";

    std::map<std::string, std::size_t> totals;
    for (const auto& [model_id, by_ao] : report.failures_by_model_ao)
        for (const auto& [ao, tallies] : by_ao)
            for (const auto& [mode, count] : tallies)
                totals[mode] += count;
    out += "\nfailure modes:\n";
    if (totals.empty())
        out += "  (none)\n";
    for (const auto& [mode, count] : totals)
        out += "  " + mode + ": " + std::to_string(count) + "\n";

    out += "\nfailures by model:\n";
    if (report.failures_by_model_ao.empty())
        out += "  (none)\n";
    for (const auto& [model_id, by_ao] : report.failures_by_model_ao) {
        out += "  " + model_id + ":\n";
        for (const auto& [ao, tallies] : by_ao)
            for (const auto& [mode, count] : tallies)
                out += "    " + ao + " " + mode + ": " + std::to_string(count) + "\n";
    }
    return out;
}

} // namespace fmkit
