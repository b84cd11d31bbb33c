// Command-line front end: analyze feature models, convert between the two
// text formats, derive mutation variants, and drive the LLM evaluation
// harness.
//
// Exit codes: 0 success, 1 domain error (invalid model, unsatisfiable
// contract, solver failure), 2 usage error, 3 I/O error.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fmkit/fmkit.hpp"

namespace {

enum class ModelFormat { Blueprint, Uvl };

struct LoadedModel {
    fmkit::FeatureModel model;
    ModelFormat format = ModelFormat::Blueprint;
    std::string text;
    std::vector<std::string> warnings;
};

ModelFormat detect_format(const std::filesystem::path& path, const std::string& text) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".uvl")
        return ModelFormat::Uvl;
    if (ext == ".bp" || ext == ".blueprint")
        return ModelFormat::Blueprint;
    for (const std::string& line : fmkit::detail::split_lines(text)) {
        std::string_view t = fmkit::detail::trim(line);
        if (t.empty())
            continue;
        return t.substr(0, 8) == "features" ? ModelFormat::Uvl : ModelFormat::Blueprint;
    }
    return ModelFormat::Blueprint;
}

LoadedModel load_model_file(const std::filesystem::path& path) {
    LoadedModel loaded;
    loaded.text = fmkit::detail::read_file(path);
    loaded.format = detect_format(path, loaded.text);
    std::string name = path.stem().string();
    if (loaded.format == ModelFormat::Uvl) {
        fmkit::UvlDocument doc = fmkit::parse_uvl(loaded.text, name);
        loaded.model = std::move(doc.model);
        loaded.warnings = std::move(doc.warnings);
    } else {
        loaded.model = fmkit::resolve(fmkit::parse_blueprint(loaded.text, name));
    }
    return loaded;
}

std::string render_model(const fmkit::FeatureModel& fm, ModelFormat format) {
    return format == ModelFormat::Uvl ? fmkit::render_uvl(fm) : fmkit::render_blueprint(fm);
}

// Configuration sidecar: first significant line "full" or "partial", then
// one "+ Name" or "- Name" line per decided feature. '#' starts a comment.
fmkit::Configuration load_configuration_file(const std::filesystem::path& path,
                                             const fmkit::FeatureModel& fm) {
    std::optional<fmkit::Completeness> completeness;
    std::vector<std::string> selected;
    std::vector<std::string> deselected;
    std::string content = fmkit::detail::read_file(path);
    std::vector<std::string> lines = fmkit::detail::split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view t = fmkit::detail::trim(lines[i]);
        if (t.empty() || t[0] == '#')
            continue;
        if (!completeness) {
            if (t == "full")
                completeness = fmkit::Completeness::Full;
            else if (t == "partial")
                completeness = fmkit::Completeness::Partial;
            else
                throw fmkit::parse_error(i + 1, 1,
                                         "configuration must start with 'full' or 'partial'");
            continue;
        }
        if (t.size() < 2 || (t[0] != '+' && t[0] != '-'))
            throw fmkit::parse_error(i + 1, 1, "expected '+ Feature' or '- Feature'");
        std::string name(fmkit::detail::trim(t.substr(1)));
        if (name.empty())
            throw fmkit::parse_error(i + 1, 1, "missing feature name");
        (t[0] == '+' ? selected : deselected).push_back(name);
    }
    if (!completeness)
        throw fmkit::parse_error(1, 1, "configuration must start with 'full' or 'partial'");
    return fmkit::make_configuration(fm, selected, deselected, *completeness);
}

std::vector<fmkit::AoKind> parse_ao_list(const std::vector<std::string>& codes) {
    std::vector<fmkit::AoKind> out;
    for (std::string code : codes) {
        std::transform(code.begin(), code.end(), code.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        std::optional<fmkit::AoKind> kind = fmkit::ao_from_string(code);
        if (!kind)
            throw std::invalid_argument("unknown analysis operation: " + code);
        out.push_back(*kind);
    }
    return out;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings)
        std::cerr << "warning: " << w << "\n";
}

int run_analyze(const std::string& input, const std::vector<std::string>& ao_codes,
                const std::string& config_path, const std::string& pair_path,
                std::uint64_t budget, bool as_json) {
    LoadedModel loaded = load_model_file(input);
    print_warnings(loaded.warnings);

    std::optional<fmkit::Configuration> config;
    if (!config_path.empty())
        config = load_configuration_file(config_path, loaded.model);
    std::optional<fmkit::FeatureModel> general;
    if (!pair_path.empty())
        general = load_model_file(pair_path).model;

    std::vector<fmkit::AoKind> aos;
    bool all = ao_codes.empty() ||
               (ao_codes.size() == 1 &&
                (ao_codes[0] == "all" || ao_codes[0] == "ALL" || ao_codes[0] == "All"));
    if (all) {
        for (fmkit::AoKind ao : fmkit::all_aos()) {
            if (ao == fmkit::AoKind::AO11 && !config)
                continue;
            if (ao == fmkit::AoKind::AO16 && !general)
                continue;
            aos.push_back(ao);
        }
    } else {
        aos = parse_ao_list(ao_codes);
        for (fmkit::AoKind ao : aos) {
            if (ao == fmkit::AoKind::AO11 && !config)
                throw std::invalid_argument("AO11 needs --config");
            if (ao == fmkit::AoKind::AO16 && !general)
                throw std::invalid_argument("AO16 needs --pair");
        }
    }

    nlohmann::json doc;
    doc["model"] = loaded.model.name;
    doc["results"] = nlohmann::json::array();
    bool any_void = false;
    for (fmkit::AoKind ao : aos) {
        fmkit::AoExtras extras;
        extras.count_budget = budget;
        if (ao == fmkit::AoKind::AO11)
            extras.config = config;
        if (ao == fmkit::AoKind::AO16)
            extras.pair_general = &*general;
        fmkit::AoResult result = fmkit::run_ao(ao, loaded.model, extras);
        any_void = any_void || result.void_model;
        if (as_json) {
            nlohmann::json entry = fmkit::ao_result_to_json(result);
            entry["text"] = fmkit::value_to_string(result);
            doc["results"].push_back(std::move(entry));
        } else {
            std::cout << fmkit::to_string(ao) << "\t" << fmkit::value_to_string(result)
                      << "\n";
        }
    }
    if (as_json)
        std::cout << doc.dump(2) << "\n";
    if (any_void)
        std::cerr << "warning: void model (no valid configuration exists)\n";
    return 0;
}

int run_convert(const std::string& input, const std::string& to, const std::string& output) {
    LoadedModel loaded = load_model_file(input);
    print_warnings(loaded.warnings);
    ModelFormat target = to == "uvl" ? ModelFormat::Uvl : ModelFormat::Blueprint;
    std::string rendered = render_model(loaded.model, target);
    if (output.empty())
        std::cout << rendered;
    else
        fmkit::detail::write_file(output, rendered);
    return 0;
}

int run_variant(const std::string& input, std::uint64_t seed, std::size_t swaps,
                const std::string& output) {
    LoadedModel loaded = load_model_file(input);
    print_warnings(loaded.warnings);
    fmkit::FeatureModel variant = fmkit::generate_variant(loaded.model, seed, swaps);
    std::string rendered = render_model(variant, loaded.format);
    if (output.empty())
        std::cout << rendered;
    else
        fmkit::detail::write_file(output, rendered);
    return 0;
}

bool is_sidecar(const std::filesystem::path& path) {
    std::string name = path.filename().string();
    auto ends_with = [&](std::string_view suffix) {
        return name.size() >= suffix.size() &&
               name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    return ends_with(".ao16.bp") || ends_with(".ao11.config");
}

std::vector<fmkit::EvalBlueprint> load_eval_blueprints(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file() || is_sidecar(entry.path()))
            continue;
        std::string ext = entry.path().extension().string();
        if (ext == ".bp" || ext == ".uvl" || ext == ".blueprint")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<fmkit::EvalBlueprint> out;
    for (const std::filesystem::path& path : files) {
        LoadedModel loaded = load_model_file(path);
        print_warnings(loaded.warnings);
        fmkit::EvalBlueprint bp;
        bp.name = path.stem().string();
        // Prompts always present the blueprint dialect, so UVL subjects are
        // re-rendered before prompting.
        bp.text = loaded.format == ModelFormat::Blueprint
                      ? loaded.text
                      : fmkit::render_blueprint(loaded.model);
        bp.model = std::move(loaded.model);

        std::filesystem::path config_path = path.parent_path() / (bp.name + ".ao11.config");
        if (std::filesystem::exists(config_path))
            bp.ao11_config = load_configuration_file(config_path, bp.model);
        std::filesystem::path pair_path = path.parent_path() / (bp.name + ".ao16.bp");
        if (std::filesystem::exists(pair_path)) {
            LoadedModel general = load_model_file(pair_path);
            bp.ao16_general_text = general.format == ModelFormat::Blueprint
                                       ? general.text
                                       : fmkit::render_blueprint(general.model);
            bp.ao16_general_model = std::move(general.model);
        }
        out.push_back(std::move(bp));
    }
    if (out.empty())
        throw fmkit::io_error("no blueprint files found in " + dir.string());
    return out;
}

int run_eval_run(const std::string& models_path, const std::string& blueprints_dir,
                 const std::string& records_path, const std::vector<std::string>& ao_codes,
                 const std::string& prompts_dir, const std::string& mock_path,
                 std::size_t concurrency, std::uint64_t budget) {
    std::vector<fmkit::ProviderConfig> models = fmkit::load_model_configs(models_path);
    std::vector<fmkit::EvalBlueprint> blueprints = load_eval_blueprints(blueprints_dir);

    std::vector<fmkit::AoKind> aos;
    bool all = ao_codes.empty() ||
               (ao_codes.size() == 1 &&
                (ao_codes[0] == "all" || ao_codes[0] == "ALL" || ao_codes[0] == "All"));
    if (all) {
        bool every_config = std::all_of(blueprints.begin(), blueprints.end(),
                                        [](const auto& bp) { return bool(bp.ao11_config); });
        bool every_pair = std::all_of(blueprints.begin(), blueprints.end(),
                                      [](const auto& bp) { return bool(bp.ao16_general_model); });
        for (fmkit::AoKind ao : fmkit::all_aos()) {
            if (ao == fmkit::AoKind::AO11 && !every_config)
                continue;
            if (ao == fmkit::AoKind::AO16 && !every_pair)
                continue;
            aos.push_back(ao);
        }
    } else {
        aos = parse_ao_list(ao_codes);
    }

    std::unique_ptr<fmkit::ProviderClient> provider;
    if (!mock_path.empty())
        provider = std::make_unique<fmkit::MockProvider>(
            fmkit::MockProvider::from_json_file(mock_path));
    else
        provider = std::make_unique<fmkit::HttpProvider>();

    fmkit::MatrixOptions options;
    options.concurrency = concurrency;
    options.prompts_dir = prompts_dir;
    options.count_budget = budget;
    fmkit::MatrixSummary summary =
        fmkit::run_matrix(models, blueprints, aos, *provider, records_path, options);
    std::cout << "new records: " << summary.new_records << "\n"
              << "skipped (already recorded): " << summary.skipped << "\n"
              << "records file: " << records_path << "\n";
    return 0;
}

int run_eval_report(const std::string& records_path, const std::string& models_path,
                    const std::string& out_dir) {
    std::vector<fmkit::RunRecord> records = fmkit::load_records(records_path);
    std::map<std::string, std::string> families;
    if (!models_path.empty())
        families = fmkit::family_map(fmkit::load_model_configs(models_path));
    fmkit::EvalReport report = fmkit::aggregate(records, families);
    std::cout << fmkit::render_summary(report);
    if (!out_dir.empty()) {
        std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        fmkit::detail::write_file(dir / "ao_accuracy.csv", fmkit::render_ao_csv(report));
        fmkit::detail::write_file(dir / "blueprint_accuracy.csv",
                                  fmkit::render_blueprint_csv(report));
        fmkit::detail::write_file(dir / "summary.txt", fmkit::render_summary(report));
        std::cout << "\nwrote " << (dir / "ao_accuracy.csv").string() << ", "
                  << (dir / "blueprint_accuracy.csv").string() << ", "
                  << (dir / "summary.txt").string() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature model analysis toolkit"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Run analysis operations on a model");
    std::string an_input, an_config, an_pair;
    std::vector<std::string> an_aos;
    std::uint64_t an_budget = fmkit::kDefaultCountBudget;
    bool an_json = false;
    analyze->add_option("input", an_input, "Model file (.bp or .uvl)")->required();
    analyze->add_option("--ao", an_aos, "Operations to run (AO1..AO16, or 'all')");
    analyze->add_option("--config", an_config, "Configuration sidecar for AO11");
    analyze->add_option("--pair", an_pair, "General-candidate model for AO16");
    analyze->add_option("--budget", an_budget, "Node budget for exact counting");
    analyze->add_flag("--json", an_json, "Emit one JSON document instead of text lines");

    // convert
    auto* convert = app.add_subcommand("convert", "Convert a model between formats");
    std::string cv_input, cv_to, cv_output;
    convert->add_option("input", cv_input, "Model file (.bp or .uvl)")->required();
    convert->add_option("--to", cv_to, "Target format")
        ->required()
        ->check(CLI::IsMember({"bp", "uvl"}));
    convert->add_option("-o,--output", cv_output, "Output file (default: stdout)");

    // variant
    auto* variant = app.add_subcommand("variant", "Derive a relationship-swap variant");
    std::string va_input, va_output;
    std::uint64_t va_seed = 0;
    std::size_t va_swaps = 1;
    variant->add_option("input", va_input, "Model file (.bp or .uvl)")->required();
    variant->add_option("--seed", va_seed, "Deterministic shuffle seed")->required();
    variant->add_option("--swaps", va_swaps, "Number of relationship kinds to swap")
        ->required();
    variant->add_option("-o,--output", va_output, "Output file (default: stdout)");

    // eval run / eval report
    auto* eval = app.add_subcommand("eval", "LLM evaluation harness");
    eval->require_subcommand(1);
    auto* eval_run = eval->add_subcommand("run", "Execute the evaluation matrix");
    std::string er_models, er_blueprints, er_records, er_prompts = "prompts", er_mock;
    std::vector<std::string> er_aos;
    std::size_t er_concurrency = 4;
    std::uint64_t er_budget = fmkit::kDefaultCountBudget;
    eval_run->add_option("--models", er_models, "Model roster JSON")->required();
    eval_run->add_option("--blueprints", er_blueprints, "Directory of evaluation subjects")
        ->required();
    eval_run->add_option("--records", er_records, "Line-delimited records file")->required();
    eval_run->add_option("--ao", er_aos, "Operations to run (default: all with inputs)");
    eval_run->add_option("--prompts", er_prompts, "Prompt template directory");
    eval_run->add_option("--mock", er_mock, "Canned-response fixture file (offline replay)");
    eval_run->add_option("--concurrency", er_concurrency, "Worker threads");
    eval_run->add_option("--budget", er_budget, "Node budget for exact counting");

    auto* eval_report = eval->add_subcommand("report", "Aggregate records into reports");
    std::string rp_records, rp_models, rp_out;
    eval_report->add_option("--records", rp_records, "Line-delimited records file")
        ->required();
    eval_report->add_option("--models", rp_models, "Model roster JSON (for family averages)");
    eval_report->add_option("--out-dir", rp_out, "Directory for CSV and summary files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (analyze->parsed())
            return run_analyze(an_input, an_aos, an_config, an_pair, an_budget, an_json);
        if (convert->parsed())
            return run_convert(cv_input, cv_to, cv_output);
        if (variant->parsed())
            return run_variant(va_input, va_seed, va_swaps, va_output);
        if (eval_run->parsed())
            return run_eval_run(er_models, er_blueprints, er_records, er_aos, er_prompts,
                                er_mock, er_concurrency, er_budget);
        if (eval_report->parsed())
            return run_eval_report(rp_records, rp_models, rp_out);
    } catch (const fmkit::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
