#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gapfill/benchmark.hpp"
#include "gapfill/bidir.hpp"
#include "gapfill/csv_io.hpp"
#include "gapfill/evo_search.hpp"
#include "gapfill/fillers.hpp"
#include "gapfill/parallel.hpp"
#include "gapfill/pipeline.hpp"
#include "gapfill/synthgen.hpp"

namespace {

using namespace gapfill;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct SynthArgs {
    SyntheticSpec spec;
    bool break_set = false;
    std::string out;
};

struct InjectArgs {
    GapSpec spec;
    std::string in, out, mask_out;
    bool header = false;
};

struct FillArgs {
    std::string in, out, method, pipeline_file;
    std::string combiner = "ramp";
    bool header = false;
    std::size_t w = 0, w1 = 0, w2 = 0, min_window = 0;
    FillerConfig filler;
    EvoConfig evo;
};

struct SearchArgs {
    std::string in, out_pipeline, out_trace;
    bool header = false;
    std::size_t w = 0;
    EvoConfig evo;
};

struct BenchArgs {
    std::string clean, gapped, mask, report, plot_data;
    bool synth_defaults = false;
    bool header = false;
    std::uint64_t seed = 42;
    std::size_t seeds = 1;
    std::size_t n = 5000;
    std::size_t tail = 0;
    std::size_t w = 0;
    EvoConfig evo;
};

GapFillPolicy make_policy(std::size_t w, std::size_t w1, std::size_t w2, std::size_t min_window) {
    GapFillPolicy policy;
    policy.w = w;
    policy.w1 = w1;
    policy.w2 = w2;
    policy.min_window = min_window;
    return policy;
}

std::string json_report_path(const std::string& csv_path) {
    const std::size_t dot = csv_path.find_last_of('.');
    const std::size_t slash = csv_path.find_last_of('/');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash))
        return csv_path.substr(0, dot) + ".json";
    return csv_path + ".json";
}

int run_synth(SynthArgs& args) {
    if (!args.break_set) args.spec.break_point = args.spec.n / 2;
    std::cout << "synth: n=" << args.spec.n << " t1=" << args.spec.t1 << " t2=" << args.spec.t2
              << " break=" << args.spec.break_point << " mu=" << args.spec.noise_mean
              << " sigma2=" << args.spec.noise_var << " tstep=" << args.spec.t_step
              << " seed=" << args.spec.rng_seed << " out=" << args.out << "\n";
    write_series_csv(generate(args.spec), args.out);
    return kExitOk;
}

int run_inject(InjectArgs& args) {
    const TimeSeries series = read_series_csv(args.in, args.header);
    std::cout << "inject: in=" << args.in << " n=" << series.size()
              << " fraction=" << args.spec.total_fraction
              << " long-gap=" << args.spec.resolved_long_length(series.size())
              << " long-center=" << args.spec.resolved_center(series.size())
              << " segment=[" << args.spec.min_segment << "," << args.spec.max_segment << "]"
              << " margin=" << args.spec.protected_margin << " seed=" << args.spec.rng_seed
              << " out=" << args.out << " mask-out=" << args.mask_out << "\n";
    const GappedSeries result = inject_gaps(series, args.spec);
    write_series_csv(result.series, args.out);
    write_mask_csv(result.mask, result.series.origin_index, args.mask_out);
    return kExitOk;
}

int run_fill(FillArgs& args) {
    const TimeSeries series = read_series_csv(args.in, args.header);
    const GapFillPolicy policy = make_policy(args.w, args.w1, args.w2, args.min_window);
    const Combiner combiner =
        args.combiner == "learned" ? Combiner::learned() : Combiner::ramp();

    std::cout << "fill: in=" << args.in << " method="
              << (args.pipeline_file.empty() ? args.method : "pipeline:" + args.pipeline_file)
              << " w=" << args.w << " combiner=" << args.combiner << " seed=" << args.evo.rng_seed
              << " out=" << args.out << "\n";

    TimeSeries filled;
    if (!args.pipeline_file.empty()) {
        std::ifstream in(args.pipeline_file);
        if (!in) throw std::runtime_error("cannot open " + args.pipeline_file);
        nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
        std::size_t saved_w = 0;
        const Pipeline genome = pipeline_from_json(j, &saved_w);
        GapFillPolicy p = policy;
        if (p.w == 0 && saved_w != 0) p.w = saved_w;
        filled = fill_bidirectional(series, p, combiner, ModelSource::pipeline(genome));
    } else {
        MethodOptions options;
        options.filler = args.filler;
        options.policy = policy;
        options.combiner_mode =
            args.combiner == "learned" ? CombinerMode::learned_blend : CombinerMode::linear_ramp;
        options.evo = args.evo;
        filled = run_fill_method(series, method_from_name(args.method), options);
    }
    write_series_csv(filled, args.out);
    return kExitOk;
}

int run_search_cmd(SearchArgs& args) {
    const TimeSeries series = read_series_csv(args.in, args.header);
    const std::size_t requested = args.w != 0 ? args.w : default_window(series.size());
    const std::size_t w = choose_window(series, requested);

    std::cout << "search: in=" << args.in << " w=" << w << " population=" << args.evo.population_size
              << " generations=" << args.evo.generations << " seed=" << args.evo.rng_seed
              << " threads=" << resolve_threads(args.evo.threads)
              << " out-pipeline=" << args.out_pipeline << " out-trace=" << args.out_trace << "\n";

    const SearchResult result = run_search(series, w, args.evo);
    write_text_atomic(args.out_pipeline, pipeline_to_json(result.best, w).dump(2) + "\n");
    if (!args.out_trace.empty()) write_trace_csv(result.trace, args.out_trace);
    std::cout << "best fitness: " << format_double(result.best_fitness) << "\n";
    return kExitOk;
}

int run_bench(BenchArgs& args) {
    MethodOptions options;
    options.policy.w = args.w;
    options.evo = args.evo;

    std::cout << "bench: " << (args.synth_defaults ? "synth-defaults" : "files")
              << " seed=" << args.seed << " seeds=" << args.seeds << " n=" << args.n
              << " tail=" << args.tail << " population=" << args.evo.population_size
              << " generations=" << args.evo.generations
              << " threads=" << resolve_threads(args.evo.threads) << " report=" << args.report
              << "\n";

    std::vector<BenchmarkReport> reports;
    std::vector<std::pair<std::string, TimeSeries>> plot_variants;
    TimeSeries plot_clean;
    Mask plot_mask;

    if (args.synth_defaults) {
        for (std::size_t s = 0; s < args.seeds; ++s) {
            SyntheticSpec synth;
            synth.n = args.n;
            synth.break_point = args.n / 2;
            synth.rng_seed = args.seed + s;
            const TimeSeries clean = generate(synth);

            GapSpec gaps;
            gaps.rng_seed = args.seed + s + 0x9e3779b9ULL;
            const GappedSeries gapped = inject_gaps(clean, gaps);

            MethodOptions opt = options;
            opt.evo.rng_seed = args.seed + s;
            reports.push_back(run_full_benchmark(clean, gapped.series, gapped.mask,
                                                 all_methods(), opt, args.tail));
            reports.back().metadata["seed"] = args.seed + s;
            if (s == 0 && !args.plot_data.empty()) {
                plot_clean = clean;
                plot_mask = gapped.mask;
                for (Method m : all_methods()) {
                    try {
                        plot_variants.emplace_back(method_name(m),
                                                   run_fill_method(gapped.series, m, opt));
                    } catch (const std::exception&) {
                        // failed methods simply have no trace
                    }
                }
            }
        }
    } else {
        if (args.clean.empty() || args.gapped.empty() || args.mask.empty())
            throw CLI::ValidationError(
                "bench", "either --synth-defaults or all of --clean/--gapped/--mask are required");
        const TimeSeries clean = read_series_csv(args.clean, args.header);
        const TimeSeries gapped = read_series_csv(args.gapped, args.header);
        const Mask mask = read_mask_csv(args.mask, args.header);
        reports.push_back(run_full_benchmark(clean, gapped, mask, all_methods(), options, args.tail));
        if (!args.plot_data.empty()) {
            plot_clean = clean;
            plot_mask = mask;
            for (Method m : all_methods()) {
                try {
                    plot_variants.emplace_back(method_name(m), run_fill_method(gapped, m, options));
                } catch (const std::exception&) {
                }
            }
        }
    }

    // Aggregate over seeds: per-method means of every finite metric.
    BenchmarkReport aggregate = reports.front();
    if (reports.size() > 1) {
        for (auto& row : aggregate.rows) {
            double mae_sum = 0, mape_sum = 0, fmape_sum = 0, dev_sum = 0;
            std::size_t cnt = 0;
            for (const auto& rep : reports) {
                for (const auto& other : rep.rows) {
                    if (other.method != row.method || other.status != "ok") continue;
                    mae_sum += other.mae;
                    mape_sum += other.mape;
                    fmape_sum += other.forecast_mape;
                    dev_sum += other.deviation;
                    ++cnt;
                }
            }
            if (cnt > 0) {
                const double c = static_cast<double>(cnt);
                if (!std::isnan(row.mae)) row.mae = mae_sum / c;
                if (!std::isnan(row.mape)) row.mape = mape_sum / c;
                if (!std::isnan(row.forecast_mape)) row.forecast_mape = fmape_sum / c;
                if (!std::isnan(row.deviation)) row.deviation = dev_sum / c;
            }
        }
        aggregate.metadata["aggregated_seeds"] = args.seeds;
    }

    nlohmann::ordered_json full = aggregate.to_json();
    full["metadata"]["base_seed"] = args.seed;
    full["metadata"]["seeds"] = args.seeds;
    if (reports.size() > 1) {
        full["per_seed"] = nlohmann::ordered_json::array();
        for (const auto& rep : reports) full["per_seed"].push_back(rep.to_json());
    }

    write_text_atomic(args.report, aggregate.to_csv());
    write_text_atomic(json_report_path(args.report), full.dump(2) + "\n");
    if (!args.plot_data.empty())
        write_text_atomic(args.plot_data, plot_data_csv(plot_clean, plot_mask, plot_variants));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gap filling toolkit for univariate time series"};
    app.require_subcommand(1);

    unsigned threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic series");
    synth_cmd->add_option("--n", synth_args.spec.n)->capture_default_str();
    synth_cmd->add_option("--t1", synth_args.spec.t1)->capture_default_str();
    synth_cmd->add_option("--t2", synth_args.spec.t2)->capture_default_str();
    synth_cmd->add_option("--break", synth_args.spec.break_point, "regime break index (default n/2)")
        ->each([&](const std::string&) { synth_args.break_set = true; });
    synth_cmd->add_option("--mu", synth_args.spec.noise_mean)->capture_default_str();
    synth_cmd->add_option("--sigma2", synth_args.spec.noise_var)->capture_default_str();
    synth_cmd->add_option("--tstep", synth_args.spec.t_step)->capture_default_str();
    synth_cmd->add_option("--seed", synth_args.spec.rng_seed)->capture_default_str();
    synth_cmd->add_option("--out", synth_args.out)->required();

    InjectArgs inject_args;
    auto* inject_cmd = app.add_subcommand("inject", "inject gaps into a series");
    inject_cmd->add_option("--in", inject_args.in)->required();
    inject_cmd->add_flag("--header", inject_args.header, "input has a header line");
    inject_cmd->add_option("--fraction", inject_args.spec.total_fraction)->capture_default_str();
    inject_cmd->add_option("--long-gap", inject_args.spec.long_gap_length,
                           "long gap length (default n/4.18)");
    inject_cmd->add_option("--long-center", inject_args.spec.long_gap_center,
                           "long gap center (default n/2)");
    inject_cmd->add_option("--min-seg", inject_args.spec.min_segment)->capture_default_str();
    inject_cmd->add_option("--max-seg", inject_args.spec.max_segment)->capture_default_str();
    inject_cmd->add_option("--margin", inject_args.spec.protected_margin)->capture_default_str();
    inject_cmd->add_option("--seed", inject_args.spec.rng_seed)->capture_default_str();
    inject_cmd->add_option("--out", inject_args.out)->required();
    inject_cmd->add_option("--mask-out", inject_args.mask_out)->required();

    FillArgs fill_args;
    auto* fill_cmd = app.add_subcommand("fill", "fill the gaps of a series");
    fill_cmd->add_option("--in", fill_args.in)->required();
    fill_cmd->add_flag("--header", fill_args.header, "input has a header line");
    std::vector<std::string> method_names;
    for (Method m : all_methods()) method_names.push_back(method_name(m));
    fill_cmd->add_option("--method", fill_args.method, "fill method")
        ->check(CLI::IsMember(method_names));
    fill_cmd->add_option("--pipeline", fill_args.pipeline_file,
                         "saved pipeline JSON (bi-directional fill with this genome)");
    fill_cmd->add_option("--out", fill_args.out)->required();
    fill_cmd->add_option("--w", fill_args.w, "lag window (0 = auto)")->capture_default_str();
    fill_cmd->add_option("--w1", fill_args.w1, "pre-history cap (0 = w)")->capture_default_str();
    fill_cmd->add_option("--w2", fill_args.w2, "post-history cap (0 = w)")->capture_default_str();
    fill_cmd->add_option("--min-window", fill_args.min_window, "minimum run to forecast (0 = w/2)")
        ->capture_default_str();
    fill_cmd->add_option("--combiner", fill_args.combiner, "forward/backward combiner")
        ->check(CLI::IsMember({"ramp", "learned"}))
        ->capture_default_str();
    fill_cmd->add_option("--poly-degree", fill_args.filler.poly_degree)->capture_default_str();
    fill_cmd->add_option("--sg-window", fill_args.filler.sg_window)->capture_default_str();
    fill_cmd->add_option("--ma-window", fill_args.filler.ma_window)->capture_default_str();
    fill_cmd->add_option("--kalman-q", fill_args.filler.kalman_process_var)->capture_default_str();
    fill_cmd->add_option("--kalman-r", fill_args.filler.kalman_obs_var)->capture_default_str();
    fill_cmd->add_option("--seed", fill_args.evo.rng_seed)->capture_default_str();
    fill_cmd->add_option("--population", fill_args.evo.population_size)->capture_default_str();
    fill_cmd->add_option("--generations", fill_args.evo.generations)->capture_default_str();

    SearchArgs search_args;
    auto* search_cmd = app.add_subcommand("search", "evolutionary pipeline search");
    search_cmd->add_option("--in", search_args.in)->required();
    search_cmd->add_flag("--header", search_args.header, "input has a header line");
    search_cmd->add_option("--w", search_args.w, "lag window (0 = auto)")->capture_default_str();
    search_cmd->add_option("--seed", search_args.evo.rng_seed)->capture_default_str();
    search_cmd->add_option("--population", search_args.evo.population_size)->capture_default_str();
    search_cmd->add_option("--generations", search_args.evo.generations)->capture_default_str();
    search_cmd->add_option("--tournament", search_args.evo.tournament_size)->capture_default_str();
    search_cmd->add_option("--mutation-rate", search_args.evo.mutation_rate)->capture_default_str();
    search_cmd->add_option("--crossover-rate", search_args.evo.crossover_rate)
        ->capture_default_str();
    search_cmd->add_option("--elitism", search_args.evo.elitism_count)->capture_default_str();
    search_cmd->add_option("--holdout", search_args.evo.fitness_holdout_fraction)
        ->capture_default_str();
    search_cmd->add_option("--out-pipeline", search_args.out_pipeline)->required();
    search_cmd->add_option("--out-trace", search_args.out_trace);

    BenchArgs bench_args;
    // Desk-scale search budget; the EvoConfig defaults are sized for `search`.
    bench_args.evo.population_size = 10;
    bench_args.evo.generations = 6;
    auto* bench_cmd = app.add_subcommand("bench", "restoration + forecast-impact benchmark");
    bench_cmd->add_flag("--synth-defaults", bench_args.synth_defaults,
                        "generate the synthetic benchmark instead of reading files");
    bench_cmd->add_option("--clean", bench_args.clean);
    bench_cmd->add_option("--gapped", bench_args.gapped);
    bench_cmd->add_option("--mask", bench_args.mask);
    bench_cmd->add_flag("--header", bench_args.header, "inputs have a header line");
    bench_cmd->add_option("--seed", bench_args.seed)->capture_default_str();
    bench_cmd->add_option("--seeds", bench_args.seeds, "number of seeds to aggregate")
        ->capture_default_str();
    bench_cmd->add_option("--n", bench_args.n, "synthetic series length")->capture_default_str();
    bench_cmd->add_option("--tail", bench_args.tail, "forecast tail (0 = auto)")
        ->capture_default_str();
    bench_cmd->add_option("--w", bench_args.w, "lag window (0 = auto)")->capture_default_str();
    bench_cmd->add_option("--population", bench_args.evo.population_size)->capture_default_str();
    bench_cmd->add_option("--generations", bench_args.evo.generations)->capture_default_str();
    bench_cmd->add_option("--report", bench_args.report)->required();
    bench_cmd->add_option("--plot-data", bench_args.plot_data, "per-gap fill traces CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help() << "\n";
        return kExitUsage;
    }

    fill_args.evo.threads = threads;
    search_args.evo.threads = threads;
    bench_args.evo.threads = threads;

    try {
        if (synth_cmd->parsed()) return run_synth(synth_args);
        if (inject_cmd->parsed()) return run_inject(inject_args);
        if (fill_cmd->parsed()) {
            if (fill_args.method.empty() && fill_args.pipeline_file.empty()) {
                std::cerr << "fill: either --method or --pipeline is required\n";
                return kExitUsage;
            }
            return run_fill(fill_args);
        }
        if (search_cmd->parsed()) return run_search_cmd(search_args);
        if (bench_cmd->parsed()) return run_bench(bench_args);
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
