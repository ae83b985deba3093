#include "cfa/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>

#include "cfa/attack.hpp"
#include "cfa/attest.hpp"
#include "cfa/errors.hpp"
#include "cfa/hausdorff.hpp"
#include "cfa/rng.hpp"
#include "json.hpp"

namespace cfa {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void fill_rep_metrics(RepMetrics& rep) {
    rep.fpr = false_positive_rate(rep.counts);
    rep.precision = precision(rep.counts);
    rep.recall = recall(rep.counts);
    rep.f1 = f1_score(rep.counts);
}

// Trained model plus calibration data for one repetition's workload.
struct RepContext {
    Workload wl;
    ExecutionGraph train_graph;
    std::vector<ExecutionGraph> val_graphs;
    VgaeModel model;
    Matrix reference;
    std::vector<double> val_distances;
};

RepContext prepare_rep(const HarnessConfig& cfg, std::uint64_t rep_seed,
                       std::size_t n_validation) {
    RepContext ctx;
    WorkloadSpec spec = cfg.workload;
    spec.seed = rep_seed;
    spec.n_traces = 1 + n_validation + cfg.n_benign_attest;
    ctx.wl = gen_workload(spec);

    ctx.train_graph = build_graph(ctx.wl.traces[0], cfg.features);
    for (std::size_t i = 0; i < n_validation; ++i)
        ctx.val_graphs.push_back(build_graph(ctx.wl.traces[1 + i], cfg.features));

    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(rep_seed, 1);
    ctx.model = train(ctx.train_graph, tc).model;
    ctx.reference = embed(ctx.model, ctx.train_graph);
    for (const ExecutionGraph& g : ctx.val_graphs)
        ctx.val_distances.push_back(
            directed_hausdorff(embed(ctx.model, g), ctx.reference));
    return ctx;
}

double threshold_from(const std::vector<double>& distances, std::size_t n) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += distances[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        var += (distances[i] - mean) * (distances[i] - mean);
    var /= static_cast<double>(n);
    return mean + 2.0 * std::sqrt(var);
}

double candidate_distance(const RepContext& ctx, const Trace& trace,
                          const FeatureOptions& features) {
    ExecutionGraph g = build_graph(trace, features);
    return directed_hausdorff(embed(ctx.model, g), ctx.reference);
}

// Runs `body(rep, out[rep])` across reps in parallel; reps own their seeds,
// so results are identical regardless of scheduling.
template <typename Body>
std::vector<RepMetrics> run_reps(std::size_t reps, const Body& body) {
    std::vector<RepMetrics> out(reps);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (long long r = 0; r < static_cast<long long>(reps); ++r) {
        try {
            out[static_cast<std::size_t>(r)].rep = static_cast<std::size_t>(r);
            body(static_cast<std::size_t>(r), out[static_cast<std::size_t>(r)]);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

MetricsReport aggregate(std::string mode, std::vector<RepMetrics> reps) {
    MetricsReport report;
    report.mode = std::move(mode);
    report.repetitions = reps.size();
    for (const RepMetrics& rep : reps) {
        report.counts += rep.counts;
        report.fpr += rep.fpr;
        report.precision += rep.precision;
        report.recall += rep.recall;
        report.f1 += rep.f1;
        for (const LengthStats& ls : rep.per_length) {
            auto it = std::find_if(
                report.per_length.begin(), report.per_length.end(),
                [&](const LengthStats& x) { return x.length == ls.length; });
            if (it == report.per_length.end()) {
                report.per_length.push_back(ls);
            } else {
                it->counts += ls.counts;
                it->mean_distance += ls.mean_distance;
            }
        }
    }
    const auto n = static_cast<double>(reps.size());
    report.fpr /= n;
    report.precision /= n;
    report.recall /= n;
    report.f1 /= n;
    for (LengthStats& ls : report.per_length) ls.mean_distance /= n;
    report.reps = std::move(reps);
    return report;
}

}  // namespace

MetricsReport run_rop_grid(const HarnessConfig& cfg,
                           const std::vector<std::size_t>& lengths,
                           std::size_t per_length, std::size_t reps) {
    auto rep_metrics = run_reps(reps, [&](std::size_t r, RepMetrics& rep) {
        const std::uint64_t rep_seed = mix_seed(cfg.seed, 7000 + r);
        RepContext ctx = prepare_rep(cfg, rep_seed, cfg.n_validation);
        const double t = threshold_from(ctx.val_distances, cfg.n_validation);

        for (std::size_t b = 0; b < cfg.n_benign_attest; ++b) {
            double d = candidate_distance(
                ctx, ctx.wl.traces[1 + cfg.n_validation + b], cfg.features);
            if (d > t)
                ++rep.counts.fp;
            else
                ++rep.counts.tn;
        }

        Rng atk_rng(mix_seed(rep_seed, 2));
        for (std::size_t length : lengths) {
            LengthStats ls;
            ls.length = length;
            for (std::size_t k = 0; k < per_length; ++k) {
                const Trace& base =
                    ctx.wl.traces[1 + cfg.n_validation +
                                  atk_rng.uniform_index(cfg.n_benign_attest)];
                AttackSpec spec;
                spec.kind = AttackKind::rop;
                spec.pos = atk_rng.uniform_index(base.steps.size() + 1);
                spec.inserts = length;
                spec.seed = atk_rng.next_u64();
                double d =
                    candidate_distance(ctx, gen_rop(base, spec), cfg.features);
                ls.mean_distance += d;
                if (d > t)
                    ++ls.counts.tp;
                else
                    ++ls.counts.fn;
            }
            ls.mean_distance /= static_cast<double>(per_length);
            rep.counts.tp += ls.counts.tp;
            rep.counts.fn += ls.counts.fn;
            rep.per_length.push_back(ls);
        }
        fill_rep_metrics(rep);
    });
    return aggregate("rop", std::move(rep_metrics));
}

MetricsReport run_dop_grid(const HarnessConfig& cfg, std::size_t n_attacks,
                           std::size_t total_inserted, std::size_t reps) {
    const std::size_t inserts = std::min<std::size_t>(100, total_inserted);
    const std::size_t repeats = total_inserted / inserts - 1;

    auto rep_metrics = run_reps(reps, [&](std::size_t r, RepMetrics& rep) {
        const std::uint64_t rep_seed = mix_seed(cfg.seed, 7000 + r);
        RepContext ctx = prepare_rep(cfg, rep_seed, cfg.n_validation);
        const double t = threshold_from(ctx.val_distances, cfg.n_validation);

        for (std::size_t b = 0; b < cfg.n_benign_attest; ++b) {
            double d = candidate_distance(
                ctx, ctx.wl.traces[1 + cfg.n_validation + b], cfg.features);
            if (d > t)
                ++rep.counts.fp;
            else
                ++rep.counts.tn;
        }

        Rng atk_rng(mix_seed(rep_seed, 3));
        LengthStats ls;
        ls.length = inserts * (1 + repeats);
        for (std::size_t k = 0; k < n_attacks; ++k) {
            const Trace& base =
                ctx.wl.traces[1 + cfg.n_validation +
                              atk_rng.uniform_index(cfg.n_benign_attest)];
            AttackSpec spec;
            spec.kind = AttackKind::dop;
            // position in the later half: the prefix then spans the whole
            // program, which keeps the edge-constrained splice search cheap
            spec.pos = base.steps.size() / 2 +
                       atk_rng.uniform_index(base.steps.size() / 2 - 1);
            spec.inserts = inserts;
            spec.repeats = repeats;
            spec.seed = atk_rng.next_u64();
            double d =
                candidate_distance(ctx, gen_dop(base, spec), cfg.features);
            ls.mean_distance += d;
            if (d > t)
                ++ls.counts.tp;
            else
                ++ls.counts.fn;
        }
        ls.mean_distance /= static_cast<double>(n_attacks);
        rep.counts.tp += ls.counts.tp;
        rep.counts.fn += ls.counts.fn;
        rep.per_length.push_back(ls);
        fill_rep_metrics(rep);
    });
    return aggregate("dop", std::move(rep_metrics));
}

std::vector<AblationRow> run_threshold_ablation(
    const HarnessConfig& cfg, const std::vector<std::size_t>& n_values,
    std::size_t reps, std::size_t n_attacks, std::size_t attack_inserts) {
    if (n_values.empty()) throw ConfigError("ablation needs n_values");
    const std::size_t max_n = *std::max_element(n_values.begin(), n_values.end());

    // Per rep and per n: confusion counts, reusing one training and one set
    // of candidate distances; only the threshold changes with n.
    struct Cell {
        Confusion counts;
    };
    std::vector<std::vector<Cell>> cells(reps,
                                         std::vector<Cell>(n_values.size()));

    run_reps(reps, [&](std::size_t r, RepMetrics&) {
        const std::uint64_t rep_seed = mix_seed(cfg.seed, 9000 + r);
        RepContext ctx = prepare_rep(cfg, rep_seed, max_n);

        std::vector<double> benign_distances;
        for (std::size_t b = 0; b < cfg.n_benign_attest; ++b)
            benign_distances.push_back(candidate_distance(
                ctx, ctx.wl.traces[1 + max_n + b], cfg.features));

        Rng atk_rng(mix_seed(rep_seed, 2));
        std::vector<double> attack_distances;
        for (std::size_t k = 0; k < n_attacks; ++k) {
            const Trace& base =
                ctx.wl.traces[1 + max_n +
                              atk_rng.uniform_index(cfg.n_benign_attest)];
            AttackSpec spec;
            spec.kind = AttackKind::rop;
            spec.pos = atk_rng.uniform_index(base.steps.size() + 1);
            spec.inserts = attack_inserts;
            spec.seed = atk_rng.next_u64();
            attack_distances.push_back(
                candidate_distance(ctx, gen_rop(base, spec), cfg.features));
        }

        for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
            double t = threshold_from(ctx.val_distances, n_values[ni]);
            Cell& cell = cells[r][ni];
            for (double d : benign_distances) {
                if (d > t)
                    ++cell.counts.fp;
                else
                    ++cell.counts.tn;
            }
            for (double d : attack_distances) {
                if (d > t)
                    ++cell.counts.tp;
                else
                    ++cell.counts.fn;
            }
        }
    });

    std::vector<AblationRow> rows;
    for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
        AblationRow row;
        row.n_val = n_values[ni];
        for (std::size_t r = 0; r < reps; ++r) {
            const Confusion& c = cells[r][ni].counts;
            row.fpr += false_positive_rate(c);
            row.precision += precision(c);
            row.recall += recall(c);
            row.f1 += f1_score(c);
        }
        const auto n = static_cast<double>(reps);
        row.fpr /= n;
        row.precision /= n;
        row.recall /= n;
        row.f1 /= n;
        rows.push_back(row);
    }
    return rows;
}

std::string report_to_csv(const MetricsReport& report) {
    std::string out =
        "mode,scope,rep,param,tp,fp,tn,fn,fpr,precision,recall,f1,"
        "mean_distance\n";
    auto add_row = [&](const std::string& scope, const std::string& rep,
                       const std::string& param, const Confusion& c, double fpr,
                       double pr, double re, double f1, double dist) {
        out += report.mode + "," + scope + "," + rep + "," + param + "," +
               std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
               std::to_string(c.tn) + "," + std::to_string(c.fn) + "," +
               fmt_double(fpr) + "," + fmt_double(pr) + "," + fmt_double(re) +
               "," + fmt_double(f1) + "," + fmt_double(dist) + "\n";
    };
    for (const RepMetrics& rep : report.reps)
        add_row("rep", std::to_string(rep.rep), "-", rep.counts, rep.fpr,
                rep.precision, rep.recall, rep.f1, 0.0);
    for (const LengthStats& ls : report.per_length)
        add_row("length", "-", std::to_string(ls.length), ls.counts,
                false_positive_rate(ls.counts), precision(ls.counts),
                recall(ls.counts), f1_score(ls.counts), ls.mean_distance);
    add_row("mean", "-", "-", report.counts, report.fpr, report.precision,
            report.recall, report.f1, 0.0);
    return out;
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json doc;
    doc["mode"] = report.mode;
    doc["repetitions"] = report.repetitions;
    doc["counts"] = {{"tp", report.counts.tp},
                     {"fp", report.counts.fp},
                     {"tn", report.counts.tn},
                     {"fn", report.counts.fn}};
    doc["fpr"] = report.fpr;
    doc["precision"] = report.precision;
    doc["recall"] = report.recall;
    doc["f1"] = report.f1;
    auto lengths = nlohmann::json::array();
    for (const LengthStats& ls : report.per_length)
        lengths.push_back({{"length", ls.length},
                           {"tp", ls.counts.tp},
                           {"fn", ls.counts.fn},
                           {"mean_distance", ls.mean_distance}});
    doc["per_length"] = std::move(lengths);
    auto reps = nlohmann::json::array();
    for (const RepMetrics& rep : report.reps) {
        nlohmann::json item = {{"rep", rep.rep},
                               {"tp", rep.counts.tp},
                               {"fp", rep.counts.fp},
                               {"tn", rep.counts.tn},
                               {"fn", rep.counts.fn},
                               {"fpr", rep.fpr},
                               {"precision", rep.precision},
                               {"recall", rep.recall},
                               {"f1", rep.f1}};
        auto rl = nlohmann::json::array();
        for (const LengthStats& ls : rep.per_length)
            rl.push_back({{"length", ls.length},
                          {"tp", ls.counts.tp},
                          {"fn", ls.counts.fn},
                          {"mean_distance", ls.mean_distance}});
        item["per_length"] = std::move(rl);
        reps.push_back(std::move(item));
    }
    doc["reps"] = std::move(reps);
    return doc.dump(2) + "\n";
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
    std::string out = "n_val,fpr,precision,recall,f1\n";
    for (const AblationRow& row : rows)
        out += std::to_string(row.n_val) + "," + fmt_double(row.fpr) + "," +
               fmt_double(row.precision) + "," + fmt_double(row.recall) + "," +
               fmt_double(row.f1) + "\n";
    return out;
}

void save_text(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open for writing: " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw WriteError("short write: " + path.string());
}

}  // namespace cfa
