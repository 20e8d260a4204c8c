#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "cgback/backmapper.hpp"
#include "cgback/fetch.hpp"
#include "cgback/losses.hpp"
#include "cgback/metrics.hpp"
#include "cgback/pdb_io.hpp"
#include "cgback/preprocess.hpp"
#include "cgback/stats.hpp"
#include "cgback/zmatrix.hpp"

namespace {

using namespace cgback;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open '" + path + "' for writing");
    out << text;
    if (!out)
        throw DataError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Ensemble load_preprocessed(const std::string& path, size_t cap, std::uint64_t seed,
                           PreprocessLog* log = nullptr) {
    ParseLog parse_log;
    const Ensemble raw = parse_pdb_file(path, &parse_log);
    for (const std::string& line : parse_log.lines)
        std::cerr << path << ": " << line << "\n";
    return preprocess(raw, PreprocessPolicy{cap, seed}, log);
}

void parallel_frames(size_t n, int threads, const std::function<void(size_t)>& fn) {
    if (threads <= 1 || n < 2) {
        for (size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (std::thread& t : pool)
        t.join();
    for (const std::exception_ptr& e : errors)
        if (e)
            std::rethrow_exception(e);
}

// ---- subcommand options ----

struct FetchArgs {
    std::string entry;
    std::string out_dir = ".";
    std::string base_url;
};

void run_fetch(const FetchArgs& args) {
    const FetchClient client = args.base_url.empty() ? FetchClient() : FetchClient(args.base_url);
    namespace fs = std::filesystem;
    const fs::path target = fs::path(args.out_dir) / (args.entry + ".pdb");
    std::error_code ec;
    const bool cached = fs::exists(target, ec) && fs::file_size(target, ec) > 0;
    const std::string path = client.fetch_entry(args.entry, args.out_dir);
    std::cerr << (cached ? "cache hit: " : "downloaded: ") << path << "\n";
    std::cout << path << "\n";
}

struct PreprocessArgs {
    std::string in_path, out_path;
    size_t cap = 500;
    std::uint64_t seed = 0;
    std::string log_path;
};

void run_preprocess(const PreprocessArgs& args) {
    std::cerr << "seed " << args.seed << "\n";
    PreprocessLog log;
    const Ensemble cleaned = load_preprocessed(args.in_path, args.cap, args.seed, &log);
    std::string out = "REMARK 99 cgback preprocess seed=" + std::to_string(args.seed) +
                      " cap=" + std::to_string(args.cap) + "\n";
    out += write_pdb(cleaned);
    write_text_file(args.out_path, out);
    if (!args.log_path.empty())
        write_text_file(args.log_path, log.text());
    std::cerr << log.text();
}

struct ZmatArgs {
    std::string in_path, out_path;
    std::string trace_path; // rebuild only
    size_t cap = 500;
    std::uint64_t seed = 0;
    int threads = 1;
};

void run_zmat_extract(const ZmatArgs& args) {
    const Ensemble e = load_preprocessed(args.in_path, args.cap, args.seed);
    std::vector<ZMatrixFrame> frames(e.frames.size());
    parallel_frames(e.frames.size(), args.threads, [&](size_t f) {
        frames[f] = extract(e.frames[f], cg_map(e.frames[f]));
    });
    write_text_file(args.out_path, zmatrix_frames_to_text(frames));
    std::cerr << "extracted " << frames.size() << " frame(s)\n";
}

void run_zmat_rebuild(const ZmatArgs& args) {
    const std::vector<ZMatrixFrame> zframes = zmatrix_frames_from_text(read_text_file(args.in_path));
    const Ensemble source = load_preprocessed(args.trace_path, SIZE_MAX, 0);
    if (source.frames.size() != zframes.size())
        throw DataError("rebuild: trace has " + std::to_string(source.frames.size()) +
                        " frame(s) but the z-matrix file has " +
                        std::to_string(zframes.size()));

    bool full_source = false;
    for (const Chain& c : source.frames.front().chains)
        for (const Residue& r : c.residues)
            if (r.atoms.size() > 1)
                full_source = true;

    Ensemble rebuilt;
    rebuilt.frames.resize(zframes.size());
    parallel_frames(zframes.size(), args.threads, [&](size_t f) {
        rebuilt.frames[f] = reconstruct_frame(cg_map(source.frames[f]), zframes[f]);
        rebuilt.frames[f].frame_id = static_cast<int>(f);
    });
    write_pdb_file(rebuilt, args.out_path);
    if (full_source) {
        double acc = 0;
        for (size_t f = 0; f < rebuilt.frames.size(); ++f)
            acc += rmsd(source.frames[f], rebuilt.frames[f]);
        std::cout << "rmsd " << acc / static_cast<double>(rebuilt.frames.size()) << "\n";
    }
    std::cerr << "rebuilt " << rebuilt.frames.size() << " frame(s)\n";
}

struct FitArgs {
    std::vector<std::string> inputs;
    std::string model_path;
    bool train_net = false;
    TrainConfig train;
    std::string loss_csv;
    size_t cap = 500;
};

void run_fit(const FitArgs& args) {
    std::cerr << "seed " << args.train.seed << "\n";
    std::vector<Ensemble> ensembles;
    ensembles.reserve(args.inputs.size());
    for (const std::string& path : args.inputs)
        ensembles.push_back(load_preprocessed(path, args.cap, args.train.seed));

    BackmapModel model;
    model.tables = fit_tables(ensembles);
    model.metadata.ensembles = args.inputs;
    model.metadata.seed = args.train.seed;

    if (args.train_net) {
        const TrainResult result = train_torsion_net(ensembles, model.tables, args.train);
        model.net = result.net;
        std::string csv = "epoch,mean_recon_loss\n";
        for (size_t i = 0; i < result.epoch_loss.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, result.epoch_loss[i]);
            csv += buf;
        }
        const std::string csv_path =
            args.loss_csv.empty() ? args.model_path + ".loss.csv" : args.loss_csv;
        write_text_file(csv_path, csv);
        std::cerr << "trained " << args.train.epochs << " epoch(s); loss "
                  << result.epoch_loss.front() << " -> " << result.epoch_loss.back() << "\n";
    }
    save_model(model, args.model_path);
    std::cerr << "model written to " << args.model_path << "\n";
}

struct BackmapArgs {
    std::string in_path, model_path, out_path;
    std::string mode = "deterministic";
    std::uint64_t seed = 0;
    bool cg_map_input = false;
    bool no_fallback = false;
    int threads = 1;
};

void run_backmap(const BackmapArgs& args) {
    std::cerr << "seed " << args.seed << "\n";
    const BackmapModel model = load_model(args.model_path);
    BackmapOptions opts;
    if (args.mode == "deterministic")
        opts.mode = BackmapMode::Deterministic;
    else if (args.mode == "stochastic")
        opts.mode = BackmapMode::Stochastic;
    else
        throw DataError("backmap: unknown mode '" + args.mode + "'");
    opts.allow_fallback = !args.no_fallback;
    // The network decodes deterministically; stochastic mode samples the
    // fitted torsion histograms instead.
    opts.use_net = opts.mode == BackmapMode::Deterministic;

    const Ensemble input = load_preprocessed(args.in_path, SIZE_MAX, 0);
    if (!args.cg_map_input) {
        for (const Chain& c : input.frames.front().chains)
            for (const Residue& r : c.residues)
                if (r.atoms.size() > 1 || r.atoms.front().name != "CA")
                    throw DataError("backmap: input has non-CA atoms; pass --cg-map to reduce a "
                                    "full structure");
    }

    Ensemble out;
    out.frames.resize(input.frames.size());
    parallel_frames(input.frames.size(), args.threads, [&](size_t f) {
        BackmapOptions frame_opts = opts;
        frame_opts.seed = mix_seed(args.seed, f);
        out.frames[f] = backmap(cg_map(input.frames[f]), model, frame_opts);
        out.frames[f].frame_id = static_cast<int>(f);
    });

    std::string text = "REMARK 99 cgback backmap mode=" + args.mode +
                       " seed=" + std::to_string(args.seed) + "\n";
    text += write_pdb(out);
    write_text_file(args.out_path, text);
    std::cerr << "backmapped " << out.frames.size() << " frame(s)\n";
}

struct EvalArgs {
    std::string truth_path, gen_path;
    std::string report_path;
    int threads = 1;
};

void run_eval(const EvalArgs& args) {
    const Ensemble truth = load_preprocessed(args.truth_path, SIZE_MAX, 0);
    const Ensemble gen = load_preprocessed(args.gen_path, SIZE_MAX, 0);
    const MetricsReport report = evaluate_ensembles(truth, gen, args.threads);
    const std::string json = report.to_json();
    if (args.report_path.empty())
        std::cout << json << "\n";
    else
        write_text_file(args.report_path, json + "\n");
    std::cerr << "rmsd " << report.rmsd << " ged_ratio " << report.ged_ratio
              << " clash_ratio_pct " << report.clash_ratio_pct << "\n";
}

struct StatsArgs {
    std::vector<std::string> inputs;
    std::string csv_path;
    std::string hist_path;
    double bin_width = 0.1;
    std::string pair;
    std::string pair_csv;
    size_t cap = 500;
    std::uint64_t seed = 0;
};

void run_stats(const StatsArgs& args) {
    std::cerr << "seed " << args.seed << "\n";
    std::vector<Ensemble> ensembles;
    std::vector<NamedEnsemble> named;
    ensembles.reserve(args.inputs.size());
    for (const std::string& path : args.inputs)
        ensembles.push_back(load_preprocessed(path, args.cap, args.seed));
    for (size_t i = 0; i < ensembles.size(); ++i)
        named.push_back({std::filesystem::path(args.inputs[i]).stem().string(), &ensembles[i]});

    const std::string csv = compactness_csv(compactness_stats(named));
    if (args.csv_path.empty())
        std::cout << csv;
    else
        write_text_file(args.csv_path, csv);

    if (!args.hist_path.empty()) {
        std::vector<Structure> frames;
        for (const Ensemble& e : ensembles)
            for (const Structure& s : e.frames)
                frames.push_back(s);
        const Histogram h = distance_histogram(frames, args.bin_width);
        write_text_file(args.hist_path, h.to_csv());
        std::cerr << "hbond_band_2.7_3.3 count=" << h.band_count(2.7, 3.3) << "\n";
    }

    if (!args.pair.empty()) {
        const PairQuery query = PairQuery::parse(args.pair);
        std::string csv_out = "entry,frame,distance\n";
        for (size_t i = 0; i < ensembles.size(); ++i) {
            const std::vector<double> ds = pair_distances(ensembles[i], query);
            for (size_t f = 0; f < ds.size(); ++f) {
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%s,%zu,%.6f\n", named[i].name.c_str(), f,
                              ds[f]);
                csv_out += buf;
            }
        }
        if (args.pair_csv.empty())
            std::cout << csv_out;
        else
            write_text_file(args.pair_csv, csv_out);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Backmapping toolkit: all-atom protein structures from CA traces"};
    app.require_subcommand(1);

    FetchArgs fetch_args;
    CLI::App* fetch_cmd = app.add_subcommand("fetch", "Download an ensemble entry");
    fetch_cmd->add_option("entry", fetch_args.entry, "Entry id, e.g. PED00151")->required();
    fetch_cmd->add_option("--out", fetch_args.out_dir, "Destination directory");
    fetch_cmd->add_option("--base-url", fetch_args.base_url,
                          "Override the download base URL (also via CGBACK_FETCH_BASE_URL)");

    PreprocessArgs pre_args;
    CLI::App* pre_cmd = app.add_subcommand("preprocess", "Clean a PDB ensemble");
    pre_cmd->add_option("input", pre_args.in_path, "Input PDB")->required();
    pre_cmd->add_option("output", pre_args.out_path, "Output PDB")->required();
    pre_cmd->add_option("--cap", pre_args.cap, "Frame cap (default 500)");
    pre_cmd->add_option("--seed", pre_args.seed, "Subsampling seed");
    pre_cmd->add_option("--log", pre_args.log_path, "Write the preprocessing log to a file");

    ZmatArgs zmat_args;
    CLI::App* zmat_cmd = app.add_subcommand("zmat", "Internal-coordinate conversions");
    zmat_cmd->require_subcommand(1);
    CLI::App* zx_cmd = zmat_cmd->add_subcommand("extract", "Structure to internal coordinates");
    zx_cmd->add_option("input", zmat_args.in_path, "Input PDB")->required();
    zx_cmd->add_option("output", zmat_args.out_path, "Output z-matrix text")->required();
    zx_cmd->add_option("--cap", zmat_args.cap, "Frame cap (default 500)");
    zx_cmd->add_option("--seed", zmat_args.seed, "Subsampling seed");
    zx_cmd->add_option("--threads", zmat_args.threads, "Frame-level threads");
    CLI::App* zr_cmd = zmat_cmd->add_subcommand("rebuild", "Internal coordinates to structure");
    zr_cmd->add_option("input", zmat_args.in_path, "Input z-matrix text")->required();
    zr_cmd->add_option("output", zmat_args.out_path, "Output PDB")->required();
    zr_cmd->add_option("--trace", zmat_args.trace_path,
                       "PDB providing the CA trace (matching frame count); a full structure "
                       "also serves as the RMSD reference")
        ->required();
    zr_cmd->add_option("--threads", zmat_args.threads, "Frame-level threads");

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Fit a backmapping model");
    fit_cmd->add_option("inputs", fit_args.inputs, "Training ensemble PDBs")->required();
    fit_cmd->add_option("--model", fit_args.model_path, "Output model JSON")->required();
    fit_cmd->add_flag("--train-net", fit_args.train_net, "Also train the torsion network");
    fit_cmd->add_option("--epochs", fit_args.train.epochs, "Training epochs (default 200)");
    fit_cmd->add_option("--lr", fit_args.train.learning_rate, "Learning rate (default 1e-3)");
    fit_cmd->add_option("--batch", fit_args.train.batch_size, "Batch size in frames (default 4)");
    fit_cmd->add_option("--seed", fit_args.train.seed, "Seed for subsampling and training");
    fit_cmd->add_option("--window", fit_args.train.window, "Feature window half-width");
    fit_cmd->add_option("--hidden", fit_args.train.hidden, "Hidden layer width");
    fit_cmd->add_option("--loss-csv", fit_args.loss_csv, "Loss trajectory CSV path");
    fit_cmd->add_option("--cap", fit_args.cap, "Frame cap per ensemble (default 500)");

    BackmapArgs bm_args;
    CLI::App* bm_cmd = app.add_subcommand("backmap", "Generate all-atom structures");
    bm_cmd->add_option("input", bm_args.in_path, "CA-trace PDB (or full PDB with --cg-map)")
        ->required();
    bm_cmd->add_option("--model", bm_args.model_path, "Model JSON")->required();
    bm_cmd->add_option("--out", bm_args.out_path, "Output PDB")->required();
    bm_cmd->add_option("--mode", bm_args.mode, "deterministic | stochastic");
    bm_cmd->add_option("--seed", bm_args.seed, "Sampling seed");
    bm_cmd->add_flag("--cg-map", bm_args.cg_map_input, "Reduce a full structure to its CA trace");
    bm_cmd->add_flag("--no-fallback", bm_args.no_fallback,
                     "Fail on residue types the model never observed");
    bm_cmd->add_option("--threads", bm_args.threads, "Frame-level threads");

    EvalArgs eval_args;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate generated structures");
    eval_cmd->add_option("truth", eval_args.truth_path, "Ground-truth PDB")->required();
    eval_cmd->add_option("generated", eval_args.gen_path, "Generated PDB")->required();
    eval_cmd->add_option("--report", eval_args.report_path, "Report JSON path (default stdout)");
    eval_cmd->add_option("--threads", eval_args.threads, "Frame-level threads");

    StatsArgs stats_args;
    CLI::App* stats_cmd = app.add_subcommand("stats", "Ensemble statistics");
    stats_cmd->add_option("inputs", stats_args.inputs, "Ensemble PDBs")->required();
    stats_cmd->add_option("--csv", stats_args.csv_path, "Compactness CSV path (default stdout)");
    stats_cmd->add_option("--hist", stats_args.hist_path, "Pair-distance histogram CSV path");
    stats_cmd->add_option("--bin-width", stats_args.bin_width, "Histogram bin width (default 0.1)");
    stats_cmd->add_option("--pair", stats_args.pair,
                          "Named atom pair, e.g. \"A:14:OG1,B:25:O\"");
    stats_cmd->add_option("--pair-csv", stats_args.pair_csv,
                          "Per-frame pair-distance CSV path (default stdout)");
    stats_cmd->add_option("--cap", stats_args.cap, "Frame cap (default 500)");
    stats_cmd->add_option("--seed", stats_args.seed, "Subsampling seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e);
        app.exit(e);
        return 1; // usage error
    }

    try {
        if (*fetch_cmd)
            run_fetch(fetch_args);
        else if (*pre_cmd)
            run_preprocess(pre_args);
        else if (*zx_cmd)
            run_zmat_extract(zmat_args);
        else if (*zr_cmd)
            run_zmat_rebuild(zmat_args);
        else if (*fit_cmd)
            run_fit(fit_args);
        else if (*bm_cmd)
            run_backmap(bm_args);
        else if (*eval_cmd)
            run_eval(eval_args);
        else if (*stats_cmd)
            run_stats(stats_args);
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
