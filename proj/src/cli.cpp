#include "dep/cli.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "dep/analysis.hpp"
#include "dep/embedding.hpp"
#include "dep/io.hpp"
#include "dep/metrics.hpp"
#include "dep/vocab.hpp"

namespace dep::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> logger() {
    static const auto instance = [] {
        auto log = spdlog::stderr_logger_mt("dep");
        log->set_pattern("[%l] %v");
        log->set_level(spdlog::level::warn);
        if (const char* level = std::getenv("DEP_LOG")) log->set_level(spdlog::level::from_str(level));
        return log;
    }();
    return instance;
}

std::size_t default_partitions() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Common {
    std::vector<std::string> datasets;
    std::string embeddings;
    std::string learned;
    std::string remap;
    std::string model_config;
    std::string ordering = "ascending_id";
    std::vector<std::uint64_t> keep;
    std::size_t partitions = default_partitions();
    std::string checkpoints = "pow2";
    std::optional<std::uint64_t> vocab_size;
    std::string out;
    std::string timestamp;
    bool force = false;
};

fs::path prepare_out_dir(const std::string& out) {
    const fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorCode::UnwritableOutput, "cannot create output directory " + dir.string());
    }
    return dir;
}

// Concatenates datasets in the order given; the token stream follows that order.
TokenizedDataset concat(const std::vector<TokenizedDataset>& parts, std::uint64_t vocab_size) {
    if (parts.size() == 1) return parts.front();
    std::vector<TokenId> tokens;
    std::vector<std::size_t> offsets{0};
    for (const auto& part : parts) {
        const std::size_t base = tokens.size();
        tokens.insert(tokens.end(), part.tokens().begin(), part.tokens().end());
        for (std::size_t s = 1; s < part.offsets().size(); ++s) offsets.push_back(base + part.offsets()[s]);
    }
    return TokenizedDataset::from_flat(std::move(tokens), std::move(offsets), vocab_size);
}

std::vector<TokenizedDataset> load_datasets(const std::vector<std::string>& paths,
                                            std::optional<std::uint64_t> vocab_size) {
    std::vector<TokenizedDataset> out;
    for (const auto& path : paths) {
        out.push_back(io::load_dataset(path, vocab_size));
        if (!vocab_size) vocab_size = out.back().vocab_size();
        logger()->info("loaded {}: {} sequences, {} tokens", path, out.back().num_sequences(),
                       out.back().total_tokens());
    }
    return out;
}

FrequencyTable scan_all(const std::vector<TokenizedDataset>& datasets, std::size_t partitions) {
    std::vector<FrequencyTable> tables;
    for (const auto& d : datasets) tables.push_back(scan_dataset(d, partitions));
    return merge_frequency_tables(tables);
}

std::optional<std::string> resolve_timestamp(const std::string& flag) {
    if (!flag.empty()) return flag;
    const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
    if (!epoch) return std::nullopt;
    char* end = nullptr;
    const long long seconds = std::strtoll(epoch, &end, 10);
    if (end == epoch || *end != '\0') throw Error(ErrorCode::Usage, "SOURCE_DATE_EPOCH is not an integer");
    const std::time_t t = static_cast<std::time_t>(seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return std::string(buf);
}

std::vector<TokenId> keep_tokens(const std::vector<std::uint64_t>& keep) {
    std::vector<TokenId> out;
    for (std::uint64_t k : keep) {
        if (k >= kMaxVocabSize) throw Error(ErrorCode::KeepTokenOutOfRange, "keep token " + std::to_string(k) + " out of range");
        out.push_back(static_cast<TokenId>(k));
    }
    return out;
}

int cmd_analyze(const Common& opt) {
    if (opt.partitions == 0) throw Error(ErrorCode::Usage, "--partitions must be >= 1");
    std::optional<std::uint64_t> vocab_size = opt.vocab_size;
    if (!vocab_size && !opt.embeddings.empty()) vocab_size = io::load_embedding_header(opt.embeddings).rows;
    if (!vocab_size && !opt.model_config.empty()) vocab_size = io::resolve_model_config(opt.model_config).vocab_size;

    const auto datasets = load_datasets(opt.datasets, vocab_size);
    const std::uint64_t vocab = datasets.front().vocab_size();
    const TokenizedDataset stream = concat(datasets, vocab);
    const FrequencyTable freqs = scan_all(datasets, opt.partitions);

    CheckpointPolicy policy;
    if (opt.checkpoints == "pow2") {
        policy = CheckpointPolicy::PowersOfTwo;
    } else if (opt.checkpoints == "all") {
        policy = CheckpointPolicy::EveryToken;
    } else {
        throw Error(ErrorCode::Usage, "--checkpoints must be pow2 or all");
    }
    const GrowthCurve curve = growth_curve(stream, policy);

    io::Json stats;
    stats["vocab_size"] = vocab;
    stats["num_sequences"] = stream.num_sequences();
    stats["total_tokens"] = freqs.total_tokens();
    stats["used_vocab"] = freqs.used_count();
    const double coverage = coverage_ratio(freqs);
    stats["coverage"] = coverage;
    stats["coverage_pct"] = to_percent_1dp(coverage);
    try {
        const HeapsFit fit = fit_heaps(curve);
        stats["heaps"] = {{"k", fit.k}, {"beta", fit.beta}, {"rmse_log", fit.rmse_log}, {"points_used", fit.points_used}};
    } catch (const Error& e) {
        stats["heaps"] = nullptr;
        stats["heaps_error"] = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    const auto unused = find_unused_tokens(freqs);
    stats["unused_count"] = unused.size();
    stats["unused_tokens"] = unused;

    const fs::path dir = prepare_out_dir(opt.out);
    const fs::path stats_path = dir / "stats.json";
    const fs::path curve_path = dir / "growth.csv";
    const fs::path freq_path = dir / "frequencies.csv";
    for (const auto& p : {stats_path, curve_path, freq_path}) io::check_writable(p, opt.force);
    io::write_file(stats_path, io::dump(stats), opt.force);
    io::write_file(curve_path, io::growth_curve_csv(curve), opt.force);
    io::write_file(freq_path, io::frequency_csv(freqs), opt.force);
    logger()->info("coverage {:.4f} ({} of {} ids used)", coverage, freqs.used_count(), vocab);
    return kExitOk;
}

int cmd_prune(const Common& opt) {
    if (opt.partitions == 0) throw Error(ErrorCode::Usage, "--partitions must be >= 1");
    const Ordering ordering = parse_ordering(opt.ordering);
    const EmbeddingMatrix matrix = io::load_embeddings(opt.embeddings);
    const auto datasets = load_datasets(opt.datasets, matrix.rows());
    const FrequencyTable freqs = scan_all(datasets, opt.partitions);
    const RemapTable remap = build_remap(freqs, ordering, keep_tokens(opt.keep));

    const auto summary = validate_matrix(matrix);
    if (summary.non_finite > 0) logger()->warn("embedding matrix has {} non-finite values", summary.non_finite);

    const fs::path dir = prepare_out_dir(opt.out);
    const fs::path emb_path = dir / "embeddings.depe";
    const fs::path remap_path = dir / "remap.json";
    std::vector<fs::path> dataset_paths;
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        dataset_paths.push_back(datasets.size() == 1 ? dir / "dataset.dept"
                                                     : dir / ("dataset_" + std::to_string(i) + ".dept"));
    }
    io::check_writable(emb_path, opt.force);
    io::check_writable(remap_path, opt.force);
    for (const auto& p : dataset_paths) io::check_writable(p, opt.force);

    io::save_embeddings(emb_path, prune_embeddings(matrix, remap), opt.force);
    io::write_file(remap_path, io::dump(io::remap_to_json(remap)), opt.force);
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        io::write_file(dataset_paths[i], io::encode_dataset_binary(apply_remap(datasets[i], remap)), opt.force);
    }
    logger()->info("pruned {} -> {} rows", matrix.rows(), remap.size());
    return kExitOk;
}

int cmd_restore(const Common& opt) {
    const EmbeddingMatrix original = io::load_embeddings(opt.embeddings);
    const EmbeddingMatrix learned = io::load_embeddings(opt.learned);
    const RemapTable remap = io::remap_from_json(io::parse_json(io::read_file(opt.remap)));
    if (remap.original_vocab_size() != original.rows()) {
        for (TokenId id : remap.inverse()) {
            if (id >= original.rows()) {
                throw Error(ErrorCode::RemapInconsistent, "remap references id " + std::to_string(id) +
                                                              " outside the original matrix of " +
                                                              std::to_string(original.rows()) + " rows");
            }
        }
    }
    const EmbeddingMatrix restored = restore_embeddings(original, learned, remap);
    const fs::path dir = prepare_out_dir(opt.out);
    io::save_embeddings(dir / "embeddings.depe", restored, opt.force);
    logger()->info("restored {} of {} rows", remap.size(), original.rows());
    return kExitOk;
}

int cmd_report(const Common& opt, std::ostream& out) {
    if (opt.remap.empty()) throw Error(ErrorCode::MissingInput, "--remap is required");
    if (opt.model_config.empty()) throw Error(ErrorCode::MissingInput, "--model-config is required");
    const RemapTable remap = io::remap_from_json(io::parse_json(io::read_file(opt.remap)));
    const ModelConfig config = io::resolve_model_config(opt.model_config);

    std::optional<EmbeddingMatrix> before;
    std::optional<EmbeddingMatrix> after;
    ReportInputs inputs;
    if (!opt.embeddings.empty()) {
        before = io::load_embeddings(opt.embeddings);
        inputs.matrix_before = &*before;
    }
    if (!opt.learned.empty()) {
        after = io::load_embeddings(opt.learned);
        inputs.matrix_after = &*after;
    }
    inputs.timestamp = resolve_timestamp(opt.timestamp);

    const std::string text = io::dump(io::report_to_json(build_report(remap, config, inputs)));
    if (opt.out.empty()) {
        out << text;
    } else {
        io::write_file(prepare_out_dir(opt.out) / "report.json", text, opt.force);
    }
    return kExitOk;
}

int cmd_count_params(const Common& opt, std::ostream& out) {
    if (opt.model_config.empty()) throw Error(ErrorCode::MissingInput, "--model-config is required");
    const ModelConfig config = io::resolve_model_config(opt.model_config);
    out << io::dump(io::param_count_to_json(config, count_params(config)));
    return kExitOk;
}

std::string preset_list() {
    std::string s;
    for (const auto& name : model_preset_names()) s += (s.empty() ? "" : ", ") + name;
    return s;
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Usage:
        case ErrorCode::InvalidArgument:
            return kExitUsage;
        case ErrorCode::ShapeMismatch:
        case ErrorCode::RemapInconsistent:
        case ErrorCode::InconsistentInputs:
            return kExitShapeMismatch;
        case ErrorCode::UnwritableOutput:
        case ErrorCode::OutputExists:
            return kExitUnwritable;
        case ErrorCode::MissingInput:
            return kExitMissingInput;
        default:
            return kExitInvalidData;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dynamic embedding pruning: shrink a model's token embedding matrix to the vocabulary a dataset uses.",
                 "dep"};
    app.require_subcommand(1);
    Common opt;

    auto add_force = [&](CLI::App* cmd) { cmd->add_flag("--force", opt.force, "Overwrite existing outputs"); };
    auto add_partitions = [&](CLI::App* cmd) {
        cmd->add_option("--partitions", opt.partitions, "Parallel scan partitions (default: hardware threads)");
    };
    const std::string config_help = "Model config: preset (" + preset_list() + ") or JSON file";

    auto* analyze = app.add_subcommand("analyze", "Vocabulary usage statistics, growth curve and Heaps fit");
    analyze->add_option("--dataset", opt.datasets, "Tokenized dataset (binary or text); repeatable")->required();
    analyze->add_option("--vocab-size", opt.vocab_size, "Vocabulary size for text datasets");
    analyze->add_option("--embeddings", opt.embeddings, "Embedding matrix (vocab size from its row count)");
    analyze->add_option("--model-config", opt.model_config, config_help);
    analyze->add_option("--checkpoints", opt.checkpoints, "Growth-curve checkpoints: pow2 or all");
    analyze->add_option("--out", opt.out, "Output directory")->required();
    add_partitions(analyze);
    add_force(analyze);

    auto* prune = app.add_subcommand("prune", "Write the reduced embedding matrix, remap and remapped datasets");
    prune->add_option("--dataset", opt.datasets, "Tokenized dataset (binary or text); repeatable")->required();
    prune->add_option("--embeddings", opt.embeddings, "Original embedding matrix")->required();
    prune->add_option("--ordering", opt.ordering, "ascending_id (default) or frequency_descending");
    prune->add_option("--keep", opt.keep, "Token ids kept regardless of occurrence (comma-separated)")->delimiter(',');
    prune->add_option("--out", opt.out, "Output directory")->required();
    add_partitions(prune);
    add_force(prune);

    auto* restore = app.add_subcommand("restore", "Scatter learned reduced embeddings back into the full matrix");
    restore->add_option("--embeddings", opt.embeddings, "Original embedding matrix")->required();
    restore->add_option("--learned", opt.learned, "Learned reduced embedding matrix")->required();
    restore->add_option("--remap", opt.remap, "Remap JSON written by prune")->required();
    restore->add_option("--out", opt.out, "Output directory")->required();
    add_force(restore);

    auto* report = app.add_subcommand("report", "Parameter and memory savings for a remap");
    report->add_option("--remap", opt.remap, "Remap JSON written by prune");
    report->add_option("--model-config", opt.model_config, config_help);
    report->add_option("--embeddings", opt.embeddings, "Original embedding matrix (optional cross-check)");
    report->add_option("--learned", opt.learned, "Reduced embedding matrix (optional cross-check)");
    report->add_option("--timestamp", opt.timestamp, "Timestamp recorded in the report");
    report->add_option("--out", opt.out, "Output directory (default: print to stdout)");
    add_force(report);

    auto* count = app.add_subcommand("count-params", "Parameter count and embedding share of a model config");
    count->add_option("--model-config", opt.model_config, config_help);

    std::vector<const char*> argv{"dep"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "USAGE: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (analyze->parsed()) return cmd_analyze(opt);
        if (prune->parsed()) return cmd_prune(opt);
        if (restore->parsed()) return cmd_restore(opt);
        if (report->parsed()) return cmd_report(opt, out);
        return cmd_count_params(opt, out);
    } catch (const Error& e) {
        err << error_code_name(e.code()) << ": " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::bad_alloc&) {
        err << "OUT_OF_MEMORY: allocation failed\n";
        return kExitInvalidData;
    }
}

}  // namespace dep::cli
