// cfa: control-flow attestation toolkit.
// Pipeline: gen-workload | gen-attack -> preprocess -> train -> calibrate ->
// attest, plus an evaluate harness and trace statistics.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cfa/attack.hpp"
#include "cfa/attest.hpp"
#include "cfa/config.hpp"
#include "cfa/errors.hpp"
#include "cfa/graph.hpp"
#include "cfa/harness.hpp"
#include "cfa/rng.hpp"
#include "cfa/trace.hpp"
#include "cfa/vgae.hpp"
#include "cfa/workload.hpp"

namespace {

using namespace cfa;

constexpr int kExitBenign = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitIo = 3;
constexpr int kExitModel = 4;
constexpr int kExitMalicious = 10;

struct Cli {
    Config config;
    std::string config_path;
    bool verbose_effective_config = true;
};

void log_line(const std::string& level, const std::string& msg) {
    std::cerr << "[" << level << "] " << msg << "\n";
}

void log_effective(const Cli& cli, const std::string& command,
                   std::uint64_t seed) {
    std::ostringstream ss;
    ss << command << " seed=" << seed
       << " max_epochs=" << cli.config.train.max_epochs
       << " patience=" << cli.config.train.patience
       << " lr0=" << cli.config.train.lr0
       << " lr_decay_factor=" << cli.config.train.lr_decay_factor
       << " lr_decay_every=" << cli.config.train.lr_decay_every
       << " lr_fixed_after=" << cli.config.train.lr_fixed_after
       << " neg_ratio=" << cli.config.train.negative_sampling_ratio
       << " constant_16th_feature=" << cli.config.constant_16th_feature;
    if (!cli.config_path.empty()) ss << " config=" << cli.config_path;
    log_line("info", ss.str());
}

TraceFormat format_from_string(const std::string& s) {
    if (s == "text") return TraceFormat::text;
    if (s == "binary") return TraceFormat::binary;
    throw ConfigError("unknown trace format '" + s + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoull(item));
    if (out.empty()) throw ConfigError("empty list '" + csv + "'");
    return out;
}

int run_preprocess(const Cli& cli, const std::string& in,
                   const std::string& out, bool stats) {
    Trace trace = load_trace(in);
    ExecutionGraph g = build_graph(trace, cli.config.feature_options());
    save_graph(g, out);
    std::cout << "nodes=" << g.node_count() << " edges=" << g.edge_count()
              << " features=" << g.features.cols
              << " trace_len=" << g.trace_len << "\n";
    if (stats) {
        std::size_t trace_bytes = std::filesystem::file_size(in);
        std::size_t graph_bytes = std::filesystem::file_size(out);
        std::printf("trace_bytes=%zu graph_bytes=%zu compression=%.2fx\n",
                    trace_bytes, graph_bytes,
                    static_cast<double>(trace_bytes) /
                        static_cast<double>(graph_bytes));
    }
    return kExitBenign;
}

int run_train(Cli& cli, const std::string& in, const std::string& out,
              std::uint64_t seed) {
    cli.config.train.seed = seed;
    log_effective(cli, "train", seed);
    ExecutionGraph g = load_graph(in);
    TrainResult result = train(g, cli.config.train);
    save_model(result.model, out);
    std::cout << "epochs=" << result.history.size()
              << " best_epoch=" << result.best_epoch
              << " best_monitor=" << result.best_monitor
              << " params=" << parameter_count(result.model)
              << " digest=" << model_digest(result.model) << "\n";
    return kExitBenign;
}

int run_calibrate(Cli& cli, const std::string& model_path,
                  const std::string& ref, std::vector<std::string> vals,
                  const std::string& corpus, const std::string& out,
                  std::uint64_t seed) {
    log_effective(cli, "calibrate", seed);
    VgaeModel model = load_model(model_path);
    ExecutionGraph ref_graph;
    std::vector<ExecutionGraph> val_graphs;
    if (!corpus.empty()) {
        CorpusManifest manifest = load_manifest(corpus);
        auto dir = std::filesystem::path(corpus).parent_path();
        auto graph_of = [&](const std::string& rel) {
            return build_graph(load_trace(dir / rel),
                               cli.config.feature_options());
        };
        ref_graph = graph_of(manifest.train_entry().path);
        for (const ManifestEntry* e :
             manifest.with_role(TraceRole::validation))
            val_graphs.push_back(graph_of(e->path));
    } else {
        if (ref.empty()) throw ConfigError("calibrate needs --ref or --corpus");
        ref_graph = load_graph(ref);
        for (const std::string& v : vals) val_graphs.push_back(load_graph(v));
    }
    AttestationProfile profile = calibrate(model, ref_graph, val_graphs);
    save_profile(profile, out);
    std::cout << "n_val=" << profile.n_val
              << " threshold=" << profile.threshold << "\n";
    return kExitBenign;
}

int run_attest(Cli& cli, const std::string& model_path,
               const std::string& profile_path, const std::string& in_graph,
               const std::string& in_trace, const std::string& out) {
    VgaeModel model = load_model(model_path);
    AttestationProfile profile = load_profile(profile_path);
    ExecutionGraph g;
    std::string trace_id;
    if (!in_trace.empty()) {
        g = build_graph(load_trace(in_trace), cli.config.feature_options());
        trace_id = in_trace;
    } else {
        if (in_graph.empty())
            throw ConfigError("attest needs --in-graph or --in-trace");
        g = load_graph(in_graph);
        trace_id = in_graph;
    }
    Verdict v = attest(profile, model, g, trace_id);
    if (!out.empty()) save_verdict(v, out);
    std::cout << "distance=" << v.distance << " threshold=" << v.threshold
              << " outcome="
              << (v.outcome == Outcome::malicious ? "malicious" : "benign")
              << "\n";
    return v.outcome == Outcome::malicious ? kExitMalicious : kExitBenign;
}

int run_gen_attack(Cli& cli, const std::string& kind, const std::string& pos,
                   std::size_t inserts, std::size_t repeats,
                   std::uint64_t seed, const std::string& in,
                   const std::string& out, const std::string& format) {
    log_effective(cli, "gen-attack", seed);
    Trace base = load_trace(in);
    AttackSpec spec;
    spec.kind = parse_attack_kind(kind);
    spec.inserts = inserts;
    spec.repeats = repeats;
    spec.seed = seed;
    if (pos == "random") {
        Rng rng(mix_seed(seed, 17));
        spec.pos = spec.kind == AttackKind::rop
                       ? rng.uniform_index(base.steps.size() + 1)
                       : 1 + rng.uniform_index(base.steps.size() - 1);
    } else {
        spec.pos = std::stoull(pos);
    }
    Trace attacked =
        spec.kind == AttackKind::rop ? gen_rop(base, spec) : gen_dop(base, spec);
    save_trace(attacked, out, format_from_string(format));
    std::cout << "kind=" << kind << " pos=" << spec.pos
              << " inserts=" << spec.inserts << " repeats=" << spec.repeats
              << " out_len=" << attacked.steps.size() << "\n";
    return kExitBenign;
}

int run_gen_workload(Cli& cli, WorkloadSpec spec, std::size_t n_validation,
                     const std::string& out_dir, const std::string& format) {
    log_effective(cli, "gen-workload", spec.seed);
    if (spec.n_traces < 1 + n_validation)
        throw ConfigError("n_traces must cover train + validation");
    Workload wl = gen_workload(spec);
    std::filesystem::create_directories(out_dir);
    CorpusManifest manifest;
    TraceFormat fmt = format_from_string(format);
    for (std::size_t i = 0; i < wl.traces.size(); ++i) {
        std::string name = "trace_" + std::to_string(i) +
                           (fmt == TraceFormat::text ? ".txt" : ".bin");
        save_trace(wl.traces[i], std::filesystem::path(out_dir) / name, fmt);
        ManifestEntry e;
        e.path = name;
        e.role = i == 0 ? TraceRole::train
                        : (i <= n_validation ? TraceRole::validation
                                             : TraceRole::attest);
        e.label = TraceLabel::benign;
        manifest.entries.push_back(e);
    }
    save_text(write_manifest(manifest),
              std::filesystem::path(out_dir) / "manifest.json");
    std::cout << "traces=" << wl.traces.size()
              << " graph_edges=" << wl.graph_edges.size() << " dir=" << out_dir
              << "\n";
    return kExitBenign;
}

int run_evaluate(Cli& cli, const std::string& mode, WorkloadSpec wspec,
                 std::size_t n_validation, std::size_t n_benign,
                 const std::string& lengths_csv, std::size_t per_length,
                 std::size_t n_attacks, std::size_t total_inserted,
                 const std::string& n_values_csv, std::size_t reps,
                 std::uint64_t seed, const std::string& out_csv,
                 const std::string& out_json) {
    cli.config.seed = seed;
    log_effective(cli, "evaluate:" + mode, seed);

    HarnessConfig hc;
    hc.workload = wspec;
    hc.train = cli.config.train;
    hc.features = cli.config.feature_options();
    hc.n_validation = n_validation;
    hc.n_benign_attest = n_benign;
    hc.seed = seed;

    if (mode == "ablation") {
        auto rows =
            run_threshold_ablation(hc, parse_size_list(n_values_csv), reps);
        std::string csv = ablation_to_csv(rows);
        if (!out_csv.empty()) save_text(csv, out_csv);
        std::cout << csv;
        return kExitBenign;
    }

    MetricsReport report;
    if (mode == "rop") {
        report = run_rop_grid(hc, parse_size_list(lengths_csv), per_length,
                              reps);
    } else if (mode == "dop") {
        report = run_dop_grid(hc, n_attacks, total_inserted, reps);
    } else {
        throw ConfigError("mode must be rop|dop|ablation");
    }
    if (!out_csv.empty()) save_text(report_to_csv(report), out_csv);
    if (!out_json.empty()) save_text(report_to_json(report), out_json);
    std::printf("mode=%s reps=%zu fpr=%.4f precision=%.4f recall=%.4f f1=%.4f\n",
                report.mode.c_str(), report.repetitions, report.fpr,
                report.precision, report.recall, report.f1);
    return kExitBenign;
}

int run_stats(const std::string& in, const std::string& graph_path) {
    Trace trace = load_trace(in);
    TraceStats s = trace_stats(trace);
    std::cout << "length=" << s.length << " unique=" << s.unique_addresses
              << " text_bytes=" << s.byte_size_text
              << " binary_bytes=" << s.byte_size_binary << "\n";
    if (!graph_path.empty()) {
        std::size_t graph_bytes = std::filesystem::file_size(graph_path);
        std::printf("graph_bytes=%zu compression_text=%.2fx\n", graph_bytes,
                    static_cast<double>(s.byte_size_text) /
                        static_cast<double>(graph_bytes));
    }
    return kExitBenign;
}

int classify_error(const std::exception& e) {
    if (dynamic_cast<const WriteError*>(&e) ||
        dynamic_cast<const IoError*>(&e))
        return kExitIo;
    if (dynamic_cast<const ModelError*>(&e) ||
        dynamic_cast<const ProfileError*>(&e) ||
        dynamic_cast<const TrainingDivergedError*>(&e))
        return kExitModel;
    if (dynamic_cast<const Error*>(&e)) return kExitParse;
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"control-flow attestation toolkit"};
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "JSON config file");

    // Flag overrides applied on top of the config file.
    struct Overrides {
        std::optional<std::size_t> max_epochs, patience, decay_every,
            fixed_after;
        std::optional<double> lr0, decay_factor, neg_ratio;
        bool constant_feature = false;
    } ov;
    app.add_option("--max-epochs", ov.max_epochs);
    app.add_option("--patience", ov.patience);
    app.add_option("--lr0", ov.lr0);
    app.add_option("--lr-decay-factor", ov.decay_factor);
    app.add_option("--lr-decay-every", ov.decay_every);
    app.add_option("--lr-fixed-after", ov.fixed_after);
    app.add_option("--neg-ratio", ov.neg_ratio);
    auto* constant_flag =
        app.add_flag("--constant-feature", ov.constant_feature,
                     "append the constant 16th feature column");

    auto* preprocess = app.add_subcommand(
        "preprocess", "convert a trace into an execution graph");
    std::string pre_in, pre_out;
    bool pre_stats = false;
    preprocess->add_option("--in", pre_in)->required();
    preprocess->add_option("--out", pre_out)->required();
    preprocess->add_flag("--stats", pre_stats, "print compression ratio");

    auto* train_cmd = app.add_subcommand("train", "train the encoder model");
    std::string train_in, train_out;
    std::uint64_t train_seed = 0;
    train_cmd->add_option("--in", train_in)->required();
    train_cmd->add_option("--out", train_out)->required();
    train_cmd->add_option("--seed", train_seed)->required();

    auto* calibrate_cmd =
        app.add_subcommand("calibrate", "derive the attestation threshold");
    std::string cal_model, cal_ref, cal_corpus, cal_out;
    std::vector<std::string> cal_vals;
    std::uint64_t cal_seed = 0;
    calibrate_cmd->add_option("--model", cal_model)->required();
    calibrate_cmd->add_option("--ref", cal_ref);
    calibrate_cmd->add_option("--val", cal_vals)->allow_extra_args(false);
    calibrate_cmd->add_option("--corpus", cal_corpus);
    calibrate_cmd->add_option("--out", cal_out)->required();
    calibrate_cmd->add_option("--seed", cal_seed)->required();

    auto* attest_cmd = app.add_subcommand("attest", "attest one execution");
    std::string at_model, at_profile, at_graph, at_trace, at_out;
    attest_cmd->add_option("--model", at_model)->required();
    attest_cmd->add_option("--profile", at_profile)->required();
    attest_cmd->add_option("--in-graph", at_graph);
    attest_cmd->add_option("--in-trace", at_trace);
    attest_cmd->add_option("--out", at_out, "verdict JSON path");

    auto* gen_attack =
        app.add_subcommand("gen-attack", "synthesize a rop/dop trace");
    std::string ga_kind, ga_pos = "random", ga_in, ga_out, ga_format = "text";
    std::size_t ga_inserts = 100, ga_repeats = 0;
    std::uint64_t ga_seed = 0;
    gen_attack->add_option("--kind", ga_kind)->required();
    gen_attack->add_option("--pos", ga_pos, "index or 'random'");
    gen_attack->add_option("--inserts", ga_inserts);
    gen_attack->add_option("--repeats", ga_repeats);
    gen_attack->add_option("--seed", ga_seed)->required();
    gen_attack->add_option("--in", ga_in)->required();
    gen_attack->add_option("--out", ga_out)->required();
    gen_attack->add_option("--format", ga_format, "text|binary");

    auto* gen_wl =
        app.add_subcommand("gen-workload", "write a synthetic benign corpus");
    WorkloadSpec gw_spec;
    gw_spec.n_traces = 12;
    std::size_t gw_validation = 10;
    std::string gw_dir, gw_format = "text";
    std::uint64_t gw_seed = 0;
    gen_wl->add_option("--n-blocks", gw_spec.n_blocks);
    gen_wl->add_option("--branching", gw_spec.branching);
    gen_wl->add_option("--trace-len", gw_spec.trace_len);
    gen_wl->add_option("--n-traces", gw_spec.n_traces);
    gen_wl->add_option("--entropy", gw_spec.input_entropy);
    gen_wl->add_option("--n-validation", gw_validation);
    gen_wl->add_option("--seed", gw_seed)->required();
    gen_wl->add_option("--out-dir", gw_dir)->required();
    gen_wl->add_option("--format", gw_format, "text|binary");

    auto* evaluate =
        app.add_subcommand("evaluate", "run the detection experiment grids");
    std::string ev_mode, ev_lengths = "5,10,15,30,40,50,75,100,150,200,250,350,500";
    std::string ev_nvalues = "2,5,10", ev_csv, ev_json;
    WorkloadSpec ev_spec;
    std::size_t ev_nval = 10, ev_benign = 20, ev_per_length = 5,
                ev_nattacks = 20, ev_total = 2000, ev_reps = 5;
    std::uint64_t ev_seed = 0;
    evaluate->add_option("--mode", ev_mode, "rop|dop|ablation")->required();
    evaluate->add_option("--n-blocks", ev_spec.n_blocks);
    evaluate->add_option("--branching", ev_spec.branching);
    evaluate->add_option("--trace-len", ev_spec.trace_len);
    evaluate->add_option("--entropy", ev_spec.input_entropy);
    evaluate->add_option("--n-validation", ev_nval);
    evaluate->add_option("--n-benign", ev_benign);
    evaluate->add_option("--lengths", ev_lengths, "rop insert lengths");
    evaluate->add_option("--per-length", ev_per_length);
    evaluate->add_option("--n-attacks", ev_nattacks);
    evaluate->add_option("--total-inserted", ev_total);
    evaluate->add_option("--n-values", ev_nvalues, "ablation val counts");
    evaluate->add_option("--reps", ev_reps);
    evaluate->add_option("--seed", ev_seed)->required();
    evaluate->add_option("--out-csv", ev_csv);
    evaluate->add_option("--out-json", ev_json);

    auto* stats = app.add_subcommand("stats", "trace / graph size statistics");
    std::string st_in, st_graph;
    stats->add_option("--in", st_in)->required();
    stats->add_option("--graph", st_graph, "compare against a graph file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (!cli.config_path.empty()) cli.config = load_config(cli.config_path);
        if (ov.max_epochs) cli.config.train.max_epochs = *ov.max_epochs;
        if (ov.patience) cli.config.train.patience = *ov.patience;
        if (ov.lr0) cli.config.train.lr0 = *ov.lr0;
        if (ov.decay_factor) cli.config.train.lr_decay_factor = *ov.decay_factor;
        if (ov.decay_every) cli.config.train.lr_decay_every = *ov.decay_every;
        if (ov.fixed_after) cli.config.train.lr_fixed_after = *ov.fixed_after;
        if (ov.neg_ratio)
            cli.config.train.negative_sampling_ratio = *ov.neg_ratio;
        if (constant_flag->count())
            cli.config.constant_16th_feature = ov.constant_feature;
        cli.config.train.validate();

        if (preprocess->parsed())
            return run_preprocess(cli, pre_in, pre_out, pre_stats);
        if (train_cmd->parsed())
            return run_train(cli, train_in, train_out, train_seed);
        if (calibrate_cmd->parsed())
            return run_calibrate(cli, cal_model, cal_ref, cal_vals, cal_corpus,
                                 cal_out, cal_seed);
        if (attest_cmd->parsed())
            return run_attest(cli, at_model, at_profile, at_graph, at_trace,
                              at_out);
        if (gen_attack->parsed())
            return run_gen_attack(cli, ga_kind, ga_pos, ga_inserts, ga_repeats,
                                  ga_seed, ga_in, ga_out, ga_format);
        if (gen_wl->parsed()) {
            gw_spec.seed = gw_seed;
            return run_gen_workload(cli, gw_spec, gw_validation, gw_dir,
                                    gw_format);
        }
        if (evaluate->parsed())
            return run_evaluate(cli, ev_mode, ev_spec, ev_nval, ev_benign,
                                ev_lengths, ev_per_length, ev_nattacks,
                                ev_total, ev_nvalues, ev_reps, ev_seed, ev_csv,
                                ev_json);
        if (stats->parsed()) return run_stats(st_in, st_graph);
    } catch (const std::exception& e) {
        log_line("error", e.what());
        return classify_error(e);
    }
    return kExitUsage;
}
