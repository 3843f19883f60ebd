#include "axonad/commands.hpp"
#include "axonad/error.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace axonad;

template <class T>
std::optional<T> optional_if(const CLI::Option* opt, const T& value) {
    return opt->count() > 0 ? std::optional<T>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"axonad: multivariate time-series anomaly detector"};
    app.require_subcommand(1);

    SynthOptions synth;
    std::uint64_t synth_seed = 0;
    auto* c_synth = app.add_subcommand("synth", "Generate a labeled synthetic series");
    c_synth->add_option("--config", synth.config, "Run config JSON (generator section)");
    c_synth->add_option("--out", synth.out, "Output CSV")->required();
    c_synth->add_flag("--force", synth.force, "Overwrite an existing output");
    auto* synth_seed_opt = c_synth->add_option("--seed", synth_seed, "Generator seed override");

    TrainOptions train;
    std::uint64_t train_seed = 0;
    auto* c_train = app.add_subcommand("train", "Train on the nominal prefix and write a checkpoint");
    c_train->add_option("--data", train.data, "Input CSV")->required();
    c_train->add_option("--config", train.config, "Run config JSON");
    c_train->add_option("--checkpoint", train.checkpoint, "Output checkpoint")->required();
    auto* train_seed_opt = c_train->add_option("--seed", train_seed, "Run seed override");
    c_train->add_flag("-v,--verbose", train.verbose, "Log every epoch to stderr");

    ScoreOptions score;
    std::string score_align, score_mode;
    auto* c_score = app.add_subcommand("score", "Score every window and write per-timestep scores");
    c_score->add_option("--checkpoint", score.checkpoint)->required();
    c_score->add_option("--data", score.data)->required();
    c_score->add_option("--out", score.out)->required();
    auto* align_opt = c_score->add_option("--align", score_align, "endpoint | center");
    auto* mode_opt =
        c_score->add_option("--mode", score_mode, "combined | recon | query | query_mse | combined_kl");

    EvalOptions eval;
    auto* c_eval = app.add_subcommand("eval", "Ranking metrics and F1 sweeps for a score file");
    c_eval->add_option("--scores", eval.scores)->required();
    c_eval->add_option("--labels", eval.labels, "CSV with a label column")->required();
    c_eval->add_option("--report", eval.report, "Output report (.json or .csv)")->required();
    c_eval->add_option("--from", eval.from, "First timestep evaluated");

    DiagnoseOptions diag;
    bool diag_all = false;
    auto* c_diag = app.add_subcommand("diagnose", "Mechanistic diagnostics of a trained model");
    c_diag->add_option("--checkpoint", diag.checkpoint)->required();
    c_diag->add_option("--data", diag.data)->required();
    c_diag->add_option("--report", diag.report)->required();
    c_diag->add_flag("--all-windows", diag_all, "Use every window, not just the test segment");

    BenchOptions bench;
    std::size_t bench_windows = 0;
    auto* c_bench = app.add_subcommand("bench", "Single-threaded per-window scoring latency");
    c_bench->add_option("--checkpoint", bench.checkpoint)->required();
    c_bench->add_option("--data", bench.data)->required();
    c_bench->add_option("--report", bench.report)->required();
    c_bench->add_option("--warmup", bench.warmup, "Untimed warmup windows");
    auto* bench_windows_opt = c_bench->add_option("--windows", bench_windows, "Timed windows (>= 10000)");

    AblateOptions ablate;
    auto* c_ablate = app.add_subcommand("ablate", "Train and evaluate every grid variant and seed");
    c_ablate->add_option("--data", ablate.data, "Labeled CSV")->required();
    c_ablate->add_option("--config", ablate.config, "Base run config JSON");
    c_ablate->add_option("--grid", ablate.grid, "Grid JSON: dotted key -> list, plus \"seeds\"")->required();
    c_ablate->add_option("--report", ablate.report, "Output CSV")->required();
    c_ablate->add_flag("-v,--verbose", ablate.verbose);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "E_USAGE: %s\n", e.what());
        return 2;
    }

    try {
        if (*c_synth) {
            synth.seed = optional_if(synth_seed_opt, synth_seed);
            cmd_synth(synth);
        } else if (*c_train) {
            train.seed = optional_if(train_seed_opt, train_seed);
            cmd_train(train);
        } else if (*c_score) {
            if (align_opt->count()) score.align = parse_alignment(score_align);
            if (mode_opt->count()) score.mode = parse_score_mode(score_mode);
            cmd_score(score);
        } else if (*c_eval) {
            const MetricReport r = cmd_eval(eval);
            std::printf("auc_roc %.6f  auc_pr %.6f  pa_f1 %.6f  event_f1 %.6f  range_f1 %.6f\n", r.auc_roc,
                        r.auc_pr, r.pa_f1, r.event_f1, r.range_f1);
        } else if (*c_diag) {
            diag.test_only = !diag_all;
            cmd_diagnose(diag);
        } else if (*c_bench) {
            bench.windows = optional_if(bench_windows_opt, bench_windows);
            const BenchReport r = cmd_bench(bench);
            std::printf("windows %zu  median %.4f ms  p99 %.4f ms\n", r.windows, r.latency_median_ms,
                        r.latency_p99_ms);
        } else if (*c_ablate) {
            cmd_ablate(ablate);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "%s: %s\n", std::string(code_name(e.code())).c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "E_IO: %s\n", e.what());
        return 1;
    }
    return 0;
}
