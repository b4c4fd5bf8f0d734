#include "addrparse/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "addrparse/corpus.hpp"
#include "addrparse/datagen.hpp"
#include "addrparse/error.hpp"
#include "addrparse/evaluation.hpp"
#include "addrparse/model_io.hpp"
#include "addrparse/report.hpp"
#include "addrparse/training.hpp"

namespace addrparse {

namespace fs = std::filesystem;

namespace {

// Options of one subcommand. Each registered option also lands in the
// manifest, so the recorded parameters are always the resolved values.
class Params {
public:
    explicit Params(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& name, T& var, const std::string& help) {
        getters_.emplace_back(name, [&var] { return ordered_json(var); });
        return app_->add_option("--" + name, var, help)->capture_default_str();
    }

    ordered_json resolved() const {
        ordered_json j = ordered_json::object();
        for (const auto& [name, get] : getters_) j[name] = get();
        return j;
    }

    CLI::App* app() const { return app_; }

private:
    CLI::App* app_;
    std::vector<std::pair<std::string, std::function<ordered_json()>>> getters_;
};

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const fs::path& path, const std::string& subcommand, const Params& params,
                    const std::string& config_file, const std::vector<std::string>& artifacts) {
    ordered_json m;
    m["format"] = "addrparse-manifest 1";
    m["tool_version"] = std::string(kToolVersion);
    m["subcommand"] = subcommand;
    m["config_file"] = config_file.empty() ? ordered_json(nullptr) : ordered_json(config_file);
    m["parameters"] = params.resolved();
    m["artifacts"] = artifacts;
    m["timestamp"] = timestamp_utc();
    write_json_file(path, m);
}

std::string arg_string(const ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

// Rebuilds an argument list from a manifest's resolved parameters.
std::vector<std::string> manifest_args(const ordered_json& m) {
    std::vector<std::string> args{m.at("subcommand").get<std::string>()};
    for (const auto& [name, value] : m.at("parameters").items()) {
        if (value.is_array()) {
            if (value.empty()) continue;
            args.push_back("--" + name);
            for (const auto& v : value) args.push_back(arg_string(v));
        } else {
            if (value.is_string() && value.get<std::string>().empty()) continue;
            args.push_back("--" + name);
            args.push_back(arg_string(value));
        }
    }
    return args;
}

std::string resolve_config(const std::string& given) {
    const fs::path p(given);
    if (p.is_relative() && !fs::exists(p)) {
        if (const char* dir = std::getenv(kConfigDirEnv); dir && *dir) {
            const fs::path alt = fs::path(dir) / p;
            if (fs::exists(alt)) return alt.string();
        }
    }
    return given;
}

std::string with_suffix(const std::string& path, const std::string& suffix) { return path + suffix; }

std::vector<const ParserModel*> pointers(const std::vector<ParserModel>& models) {
    std::vector<const ParserModel*> out;
    for (const auto& m : models) out.push_back(&m);
    return out;
}

struct GenerateArgs {
    std::string config, out, manifest;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

struct SplitArgs {
    std::string in, train_out, val_out, manifest;
    double fraction = 0.8;
    std::uint64_t seed = 0;
};

struct TrainArgs {
    std::string train, val, out_dir, manifest;
    std::string variant = "composed";
    std::string precision = "single";
    ModelConfig model;
    TrainConfig train_cfg;
    std::uint64_t hash_buckets = 4096;
};

struct EvalArgs {
    std::vector<std::string> models;
    std::string corpus, out, text, manifest, train_config, eval_config;
};

struct ZstatArgs {
    std::string a, b, out, text, manifest;
};

struct ParseArgs {
    std::string model, address, file, out, manifest;
};

struct ReorderArgs {
    std::string model, corpus, out, manifest;
    std::vector<int> targets{1, 2};
    std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a, const Params& p, std::ostream& out) {
    const std::string config_path = resolve_config(a.config);
    auto cfg = load_generator_config(config_path);
    const auto corpus = generate(cfg);
    save_corpus(corpus, a.out);
    const std::string manifest = a.manifest.empty() ? with_suffix(a.out, ".manifest.json") : a.manifest;
    write_manifest(manifest, "generate", p, config_path, {a.out});
    out << "wrote " << corpus.size() << " addresses to " << a.out << '\n';
    return kExitOk;
}

int cmd_split(const SplitArgs& a, const Params& p, std::ostream& out) {
    const auto corpus = load_corpus(a.in);
    if (!(a.fraction > 0.0 && a.fraction < 1.0)) throw ConfigError("fraction must lie in (0, 1)");
    auto [train, val] = split(corpus, a.fraction, a.seed);
    save_corpus(train, a.train_out);
    save_corpus(val, a.val_out);
    const std::string manifest =
        a.manifest.empty() ? with_suffix(a.train_out, ".manifest.json") : a.manifest;
    write_manifest(manifest, "split", p, "", {a.train_out, a.val_out});
    out << "train " << train.size() << ", val " << val.size() << '\n';
    return kExitOk;
}

int cmd_train(TrainArgs a, const Params& p, std::ostream& out) {
    a.model.variant = parse_variant(a.variant);
    a.train_cfg.lstm_precision = a.precision == "double" ? nn::Precision::Double : nn::Precision::Single;
    a.model.hash_buckets = static_cast<std::size_t>(a.hash_buckets);
    DatasetBundle data{load_corpus(a.train), load_corpus(a.val)};
    const auto runs = run_protocol(data, a.train_cfg, a.model, [&out](const EpochRecord& e) {
        out << "epoch " << e.epoch << " train " << e.train_loss << " val " << e.val_loss << " lr "
            << e.lr << '\n';
    });
    fs::create_directories(a.out_dir);
    std::vector<std::string> artifacts;
    ordered_json summary;
    summary["format"] = "addrparse-train 1";
    summary["variant"] = a.variant;
    summary["runs"] = ordered_json::array();
    for (const auto& run : runs) {
        const auto stem = (fs::path(a.out_dir) / ("seed-" + std::to_string(run.seed))).string();
        save_model(run.model, stem + ".model");
        write_json_file(stem + ".history.json", history_to_json(run.seed, run.history));
        artifacts.push_back(stem + ".model");
        artifacts.push_back(stem + ".history.json");
        summary["runs"].push_back({{"seed", run.seed},
                                   {"model", stem + ".model"},
                                   {"history", stem + ".history.json"},
                                   {"epochs", run.history.epochs.size()},
                                   {"best_val_loss", run.history.best_val_loss}});
    }
    const auto summary_path = (fs::path(a.out_dir) / "train.json").string();
    write_json_file(summary_path, summary);
    artifacts.push_back(summary_path);
    const std::string manifest =
        a.manifest.empty() ? (fs::path(a.out_dir) / "manifest.json").string() : a.manifest;
    write_manifest(manifest, "train", p, "", artifacts);
    out << "trained " << runs.size() << " models into " << a.out_dir << '\n';
    return kExitOk;
}

int cmd_eval(const EvalArgs& a, const Params& p, std::ostream& out) {
    std::vector<ParserModel> models;
    std::vector<std::uint64_t> seeds;
    for (const auto& path : a.models) {
        models.push_back(load_model(path));
        seeds.push_back(models.back().config().seed);
    }
    const auto corpus = load_corpus(a.corpus);
    const auto ptrs = pointers(models);
    EvalReport report;
    std::string config_file;
    if (!a.train_config.empty() || !a.eval_config.empty()) {
        if (a.train_config.empty() || a.eval_config.empty()) {
            throw ConfigError("--train-config and --eval-config must be given together");
        }
        const auto train_cfg = load_generator_config(resolve_config(a.train_config));
        const auto eval_cfg = load_generator_config(resolve_config(a.eval_config));
        report = zero_shot_eval(ptrs, seeds, corpus, train_cfg.countries, eval_cfg.countries);
        config_file = resolve_config(a.eval_config);
    } else {
        report = build_report(ptrs, seeds, corpus);
    }
    write_json_file(a.out, report_to_json(report));
    std::vector<std::string> artifacts{a.out};
    const auto text = render_report_text(report);
    if (!a.text.empty()) {
        write_text_file(a.text, text);
        artifacts.push_back(a.text);
    }
    write_manifest(a.manifest.empty() ? with_suffix(a.out, ".manifest.json") : a.manifest, "eval", p,
                   config_file, artifacts);
    out << text;
    return kExitOk;
}

int cmd_zstat(const ZstatArgs& a, const Params& p, std::ostream& out) {
    const auto ra = report_from_json(read_json_file(a.a));
    const auto rb = report_from_json(read_json_file(a.b));
    const auto z = compare_reports(ra, rb);
    write_json_file(a.out, zstat_to_json(z));
    std::vector<std::string> artifacts{a.out};
    const auto text = render_zstat_text(z);
    if (!a.text.empty()) {
        write_text_file(a.text, text);
        artifacts.push_back(a.text);
    }
    write_manifest(a.manifest.empty() ? with_suffix(a.out, ".manifest.json") : a.manifest, "zstat", p,
                   "", artifacts);
    out << text;
    return kExitOk;
}

int cmd_parse(const ParseArgs& a, const Params& p, std::ostream& out) {
    if (a.address.empty() == a.file.empty()) throw ConfigError("give exactly one of --address or --file");
    const auto model = load_model(a.model);
    std::vector<std::string> inputs;
    if (!a.address.empty()) {
        inputs.push_back(a.address);
    } else {
        std::istringstream lines(read_text_file(a.file));
        for (std::string line; std::getline(lines, line);) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) inputs.push_back(line);
        }
    }
    std::ostringstream text;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (i) text << '\n';
        const auto r = parse(inputs[i], model);
        for (std::size_t t = 0; t < r.tokens.size(); ++t) {
            text << r.tokens[t] << '\t' << tag_name(r.tags[t]) << '\n';
        }
    }
    std::vector<std::string> artifacts;
    if (!a.out.empty()) {
        write_text_file(a.out, text.str());
        artifacts.push_back(a.out);
    } else {
        out << text.str();
    }
    const std::string manifest =
        !a.manifest.empty() ? a.manifest : !a.out.empty() ? with_suffix(a.out, ".manifest.json")
                                                          : "parse.manifest.json";
    write_manifest(manifest, "parse", p, "", artifacts);
    return kExitOk;
}

int cmd_reorder(const ReorderArgs& a, const Params& p, std::ostream& out) {
    const auto model = load_model(a.model);
    const auto corpus = load_corpus(a.corpus);
    const auto r = reorder_study(model, corpus, a.targets, a.seed);
    ordered_json j;
    j["format"] = "addrparse-reorder 1";
    j["targets"] = a.targets;
    j["before"] = {{"n", r.before.n}, {"k", r.before.k}, {"token_accuracy", r.before.token_accuracy}};
    j["after"] = {{"n", r.after.n}, {"k", r.after.k}, {"token_accuracy", r.after.token_accuracy}};
    j["drop"] = r.drop;
    ordered_json split = ordered_json::object();
    for (const auto& [target, count] : r.records_per_target) split[std::to_string(target)] = count;
    j["records_per_target"] = split;
    write_json_file(a.out, j);
    write_manifest(a.manifest.empty() ? with_suffix(a.out, ".manifest.json") : a.manifest,
                   "reorder-study", p, "", {a.out});
    out << "before " << r.before.token_accuracy << " after " << r.after.token_accuracy << " drop "
        << r.drop << '\n';
    return kExitOk;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    const auto m = read_json_file(manifest_path);
    if (m.value("format", std::string{}) != "addrparse-manifest 1") {
        throw SchemaError(manifest_path + ": not a manifest");
    }
    if (m.at("subcommand").get<std::string>() == "replay") throw SchemaError("cannot replay a replay");
    const auto version = m.value("tool_version", std::string{});
    if (version != kToolVersion) {
        err << "warning: manifest written by version " << version << ", running " << kToolVersion << '\n';
    }
    return dispatch(manifest_args(m), out, err);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Address parsing toolkit", "addrparse"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate a synthetic tagged corpus");
    Params gp(g);
    gp.add("config", gen.config, "Generator config (JSON)")->required();
    gp.add("out", gen.out, "Output corpus (JSON Lines)")->required();
    gp.add("manifest", gen.manifest, "Manifest path (default <out>.manifest.json)");

    SplitArgs sp;
    auto* s = app.add_subcommand("split", "Seeded train/validation split of a corpus");
    Params spp(s);
    spp.add("in", sp.in, "Input corpus")->required();
    spp.add("train-out", sp.train_out, "Training part")->required();
    spp.add("val-out", sp.val_out, "Validation part")->required();
    spp.add("fraction", sp.fraction, "Training fraction");
    spp.add("seed", sp.seed, "Shuffle seed");
    spp.add("manifest", sp.manifest, "Manifest path (default <train-out>.manifest.json)");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train one model per seed");
    Params tp(t);
    tp.add("train", tr.train, "Training corpus")->required();
    tp.add("val", tr.val, "Validation corpus")->required();
    tp.add("out-dir", tr.out_dir, "Output directory")->required();
    tp.add("variant", tr.variant, "Word embedder")->check(CLI::IsMember({"composed", "fixed"}));
    tp.add("subword-dim", tr.model.subword_dim, "Subword embedding width");
    tp.add("composer-hidden", tr.model.composer_hidden, "Composer width (composed word width)");
    tp.add("fixed-word-dim", tr.model.fixed_word_dim, "Fixed word width");
    tp.add("hidden", tr.model.hidden, "Encoder/decoder width");
    tp.add("ngram", tr.model.ngram_n, "Character n-gram length (fixed)");
    tp.add("hash-buckets", tr.hash_buckets, "n-gram hash buckets (fixed)");
    tp.add("bpe-merges", tr.model.bpe_merges, "BPE merges (composed)");
    tp.add("epochs-max", tr.train_cfg.epochs_max, "Maximum epochs");
    tp.add("batch-size", tr.train_cfg.batch_size, "Batch size");
    tp.add("lr", tr.train_cfg.lr0, "Initial learning rate");
    tp.add("plateau-patience", tr.train_cfg.plateau_patience, "Epochs without improvement before lr cut");
    tp.add("lr-factor", tr.train_cfg.lr_factor, "Learning-rate cut factor");
    tp.add("early-stop-patience", tr.train_cfg.early_stop_patience,
           "Epochs without improvement before stopping");
    tp.add("teacher-forcing", tr.train_cfg.teacher_forcing_ratio, "Teacher forcing probability per batch");
    tp.add("seeds", tr.train_cfg.seeds, "Training seeds")->delimiter(',');
    tp.add("retry-seed", tr.train_cfg.retry_seed, "Replacement seed for a diverged run");
    tp.add("divergence-threshold", tr.train_cfg.divergence_threshold, "Train loss counted as divergence");
    tp.add("divergence-grace", tr.train_cfg.divergence_grace_epochs, "Epochs before the threshold applies");
    tp.add("precision", tr.precision, "Arithmetic of the recurrent steps during training")
        ->check(CLI::IsMember({"single", "double"}));
    tp.add("manifest", tr.manifest, "Manifest path (default <out-dir>/manifest.json)");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate models on a corpus");
    Params ep(e);
    ep.add("models", ev.models, "Model files, one per seed")->required();
    ep.add("corpus", ev.corpus, "Evaluation corpus")->required();
    ep.add("out", ev.out, "Report (JSON)")->required();
    ep.add("text", ev.text, "Plain-text rendering");
    ep.add("train-config", ev.train_config, "Generator config of the training countries (zero-shot)");
    ep.add("eval-config", ev.eval_config, "Generator config of the evaluated countries (zero-shot)");
    ep.add("manifest", ev.manifest, "Manifest path (default <out>.manifest.json)");

    ZstatArgs zs;
    auto* z = app.add_subcommand("zstat", "Two-proportion z-tests between two eval reports");
    Params zp(z);
    zp.add("a", zs.a, "First report")->required();
    zp.add("b", zs.b, "Second report")->required();
    zp.add("out", zs.out, "Output (JSON)")->required();
    zp.add("text", zs.text, "Plain-text rendering");
    zp.add("manifest", zs.manifest, "Manifest path (default <out>.manifest.json)");

    ParseArgs pa;
    auto* pr = app.add_subcommand("parse", "Tag addresses with a trained model");
    Params pp(pr);
    pp.add("model", pa.model, "Model file")->required();
    pp.add("address", pa.address, "Address text");
    pp.add("file", pa.file, "File with one address per line");
    pp.add("out", pa.out, "Output file (default stdout)");
    pp.add("manifest", pa.manifest, "Manifest path");

    ReorderArgs ro;
    auto* r = app.add_subcommand("reorder-study", "Accuracy before and after reordering to other patterns");
    Params rp(r);
    rp.add("model", ro.model, "Model file")->required();
    rp.add("corpus", ro.corpus, "Single-pattern corpus")->required();
    rp.add("targets", ro.targets, "Target pattern ids")->delimiter(',');
    rp.add("seed", ro.seed, "Split seed");
    rp.add("out", ro.out, "Output (JSON)")->required();
    rp.add("manifest", ro.manifest, "Manifest path (default <out>.manifest.json)");

    std::string replay_manifest;
    auto* rep = app.add_subcommand("replay", "Re-run a command from its manifest");
    rep->add_option("manifest", replay_manifest, "Manifest file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (g->parsed()) return cmd_generate(gen, gp, out);
    if (s->parsed()) return cmd_split(sp, spp, out);
    if (t->parsed()) return cmd_train(tr, tp, out);
    if (e->parsed()) return cmd_eval(ev, ep, out);
    if (z->parsed()) return cmd_zstat(zs, zp, out);
    if (pr->parsed()) return cmd_parse(pa, pp, out);
    if (r->parsed()) return cmd_reorder(ro, rp, out);
    return cmd_replay(replay_manifest, out, err);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out, err);
    } catch (const ProtocolFailed& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitDiverged;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitData;
    }
}

}  // namespace addrparse
