#include "histreg/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "histreg/dvf.hpp"
#include "histreg/errors.hpp"
#include "histreg/evaluation.hpp"
#include "histreg/io.hpp"
#include "histreg/multiscale.hpp"
#include "histreg/parallel.hpp"
#include "histreg/refinery.hpp"
#include "histreg/synthetic.hpp"
#include "histreg/warp.hpp"

namespace histreg::cli {
namespace {

using Json = nlohmann::ordered_json;

// Reports carry 9 significant digits so they are stable across runs and platforms.
Json number(double v) {
    if (!std::isfinite(v)) {
        return nullptr;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::strtod(buf, nullptr);
}

Json summary_json(const refinery::ScoreSummary &s) {
    Json j;
    j["min"] = number(s.min);
    j["median"] = number(s.median);
    j["max"] = number(s.max);
    return j;
}

Json report_json(const refinery::RefineReport &r) {
    Json j;
    j["input_counts"] = r.input_counts;
    j["merged"] = r.merged;
    j["flagged_global"] = r.flagged_global;
    j["flagged_local"] = r.flagged_local;
    j["surviving"] = r.surviving;
    j["global_skipped"] = r.global_skipped;
    j["local_skipped"] = r.local_skipped;
    j["global_scores"] = summary_json(r.global_scores);
    j["local_scores"] = summary_json(r.local_scores);
    return j;
}

void write_json(const Json &j, const std::string &path, std::ostream &out) {
    const std::string text = j.dump(2) + "\n";
    if (path.empty() || path == "-") {
        out << text;
    } else {
        io::write_text_file(path, text);
    }
}

struct ThreadOption {
    std::size_t threads = 0;

    void attach(CLI::App *cmd) {
        cmd->add_option("--threads", threads,
                        "Worker thread cap (default: HISTREG_THREADS or hardware concurrency)")
            ->check(CLI::PositiveNumber);
    }
    void apply() const {
        if (threads > 0) {
            set_thread_cap(threads);
        }
    }
};

struct FilterOptions {
    std::size_t if_trees = 100;
    std::size_t if_subsample = 256;
    double if_threshold = 0.6;
    std::optional<double> if_contamination;
    std::size_t la_rounds = 10;
    double la_fraction = 0.25;
    std::optional<double> la_threshold;
    double dedup_radius = refinery::kDefaultDedupRadius;
    std::uint64_t seed = 0;

    void attach(CLI::App *cmd) {
        cmd->add_option("--if-trees", if_trees, "Isolation forest tree count")->capture_default_str();
        cmd->add_option("--if-subsample", if_subsample, "Isolation forest subsample size")
            ->capture_default_str();
        cmd->add_option("--if-threshold", if_threshold, "Anomaly score cutoff in (0, 1)")
            ->capture_default_str();
        cmd->add_option("--if-contamination", if_contamination,
                        "Flag this fraction of highest scores instead of thresholding");
        cmd->add_option("--la-rounds", la_rounds, "Local affine sampling rounds")->capture_default_str();
        cmd->add_option("--la-fraction", la_fraction, "Local affine sample fraction")
            ->capture_default_str();
        cmd->add_option("--la-threshold", la_threshold,
                        "Mean deviation cutoff in pixels (default 0.02 x image diagonal)");
        cmd->add_option("--dedup-radius", dedup_radius, "Merge radius in pixels; 0 disables")
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
    }

    [[nodiscard]] iforest::ForestConfig forest() const {
        iforest::ForestConfig cfg;
        cfg.tree_count = if_trees;
        cfg.subsample_size = if_subsample;
        cfg.score_threshold = if_threshold;
        cfg.contamination = if_contamination;
        cfg.seed = seed;
        return cfg;
    }

    [[nodiscard]] local_affine::LocalAffineConfig local(std::optional<ImageMeta> image) const {
        local_affine::LocalAffineConfig cfg;
        cfg.rounds = la_rounds;
        cfg.sample_fraction = la_fraction;
        cfg.deviation_threshold = la_threshold;
        cfg.image = image;
        cfg.seed = derive_seed(seed, 0x10CA1);
        return cfg;
    }
};

std::vector<char *> to_argv(std::vector<std::string> &args) {
    std::vector<char *> argv;
    argv.reserve(args.size() + 1);
    for (auto &a : args) {
        argv.push_back(a.data());
    }
    argv.push_back(nullptr);
    return argv;
}

}  // namespace

int dispatch(const std::vector<std::string> &args_in, std::ostream &out, std::ostream &err) {
    CLI::App app{"Match refinement, deformation fields and landmark evaluation for image registration",
                 "histreg"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    // refine
    auto *refine = app.add_subcommand("refine", "Merge and filter candidate matches");
    std::vector<std::string> refine_inputs;
    std::string refine_out;
    std::string refine_report;
    std::optional<std::uint32_t> refine_w;
    std::optional<std::uint32_t> refine_h;
    FilterOptions refine_filters;
    ThreadOption refine_threads;
    refine->add_option("--matches", refine_inputs, "Match CSV (repeatable)")->required();
    refine->add_option("--out", refine_out, "Refined match CSV")->required();
    refine->add_option("--report", refine_report, "JSON report path (default: stdout)");
    refine->add_option("--width", refine_w, "Fixed image width (sets the default local threshold)");
    refine->add_option("--height", refine_h, "Fixed image height");
    refine_filters.attach(refine);
    refine_threads.attach(refine);

    // dvf
    auto *dvf_cmd = app.add_subcommand("dvf", "Interpolate matches into a dense DVF1 raster");
    std::string dvf_matches;
    std::string dvf_out;
    std::string dvf_report;
    std::uint32_t dvf_w = 0;
    std::uint32_t dvf_h = 0;
    double dvf_lambda = 0.0;
    ThreadOption dvf_threads;
    dvf_cmd->add_option("--matches", dvf_matches, "Match CSV")->required();
    dvf_cmd->add_option("--width", dvf_w, "Fixed image width")->required()->check(CLI::PositiveNumber);
    dvf_cmd->add_option("--height", dvf_h, "Fixed image height")->required()->check(CLI::PositiveNumber);
    dvf_cmd->add_option("--lambda", dvf_lambda, "TPS regularization")->capture_default_str();
    dvf_cmd->add_option("--out", dvf_out, "Output DVF1 path")->required();
    dvf_cmd->add_option("--report", dvf_report, "JSON diagnostics path (default: stdout)");
    dvf_threads.attach(dvf_cmd);

    // warp
    auto *warp_cmd = app.add_subcommand("warp", "Apply a DVF1 raster to a moving image");
    std::string warp_image;
    std::string warp_dvf;
    std::string warp_out;
    ThreadOption warp_threads;
    warp_cmd->add_option("--image", warp_image, "Moving PNG")->required();
    warp_cmd->add_option("--dvf", warp_dvf, "DVF1 raster")->required();
    warp_cmd->add_option("--out", warp_out, "Warped PNG")->required();
    warp_threads.attach(warp_cmd);

    // checkerboard
    auto *board_cmd = app.add_subcommand("checkerboard", "Alternate tiles of two images");
    std::string board_a;
    std::string board_b;
    std::string board_out;
    std::uint32_t board_tile = 64;
    board_cmd->add_option("--a", board_a, "First PNG")->required();
    board_cmd->add_option("--b", board_b, "Second PNG")->required();
    board_cmd->add_option("--tile", board_tile, "Tile side in pixels")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    board_cmd->add_option("--out", board_out, "Output PNG")->required();

    // eval
    auto *eval_cmd = app.add_subcommand("eval", "rTRE statistics over landmark pairs");
    std::vector<std::string> eval_pred;
    std::vector<std::string> eval_truth;
    std::vector<std::uint32_t> eval_w;
    std::vector<std::uint32_t> eval_h;
    std::string eval_out;
    bool eval_squared = false;
    eval_cmd->add_option("--pred", eval_pred, "Predicted landmark CSV (repeatable)")->required();
    eval_cmd->add_option("--truth", eval_truth, "Ground-truth landmark CSV (repeatable)")->required();
    eval_cmd->add_option("--width", eval_w, "Image width (once, or once per pair)")->required();
    eval_cmd->add_option("--height", eval_h, "Image height (once, or once per pair)")->required();
    eval_cmd->add_option("--out", eval_out, "JSON report path (default: stdout)");
    eval_cmd->add_flag("--squared", eval_squared, "Use squared distance as TRE");

    // transfer
    auto *transfer_cmd = app.add_subcommand("transfer", "Map fixed-frame landmarks through a DVF");
    std::string transfer_in;
    std::string transfer_dvf;
    std::string transfer_out;
    transfer_cmd->add_option("--landmarks", transfer_in, "Landmark CSV")->required();
    transfer_cmd->add_option("--dvf", transfer_dvf, "DVF1 raster")->required();
    transfer_cmd->add_option("--out", transfer_out, "Output landmark CSV")->required();

    // overlay
    auto *overlay_cmd = app.add_subcommand("overlay", "Draw predicted (red) and true (blue) landmarks");
    std::string overlay_image;
    std::string overlay_pred;
    std::string overlay_truth;
    std::string overlay_out;
    overlay_cmd->add_option("--image", overlay_image, "Background PNG")->required();
    overlay_cmd->add_option("--pred", overlay_pred, "Predicted landmark CSV")->required();
    overlay_cmd->add_option("--truth", overlay_truth, "Ground-truth landmark CSV")->required();
    overlay_cmd->add_option("--out", overlay_out, "Output PNG")->required();

    // pipeline
    auto *pipe_cmd = app.add_subcommand("pipeline", "Multiscale matching with an external matcher");
    std::string pipe_moving;
    std::string pipe_fixed;
    std::string pipe_matcher;
    std::string pipe_out;
    std::string pipe_report;
    std::optional<std::size_t> pipe_levels;
    std::size_t pipe_windows = 16;
    FilterOptions pipe_filters;
    ThreadOption pipe_threads;
    pipe_cmd->add_option("--moving", pipe_moving, "Moving PNG")->required();
    pipe_cmd->add_option("--fixed", pipe_fixed, "Fixed PNG")->required();
    pipe_cmd->add_option("--matcher", pipe_matcher,
                         "Matcher command template with {a} {b} {out} placeholders")
        ->required();
    pipe_cmd->add_option("--out", pipe_out, "Refined match CSV")->required();
    pipe_cmd->add_option("--report", pipe_report, "JSON level log path (default: stdout)");
    pipe_cmd->add_option("--levels", pipe_levels, "Maximum number of levels");
    pipe_cmd->add_option("--max-windows", pipe_windows, "Crop windows per level")
        ->capture_default_str();
    pipe_filters.attach(pipe_cmd);
    pipe_threads.attach(pipe_cmd);

    // synth
    auto *synth_cmd = app.add_subcommand("synth", "Generate a synthetic registration case");
    std::string synth_dir;
    std::uint32_t synth_w = 1000;
    std::uint32_t synth_h = 1000;
    std::string synth_kind = "sinusoidal";
    double synth_amplitude = 10.0;
    double synth_shift_x = 3.0;
    double synth_shift_y = -2.0;
    std::size_t synth_count = 500;
    double synth_noise = 1.0;
    double synth_fraction = 0.05;
    double synth_magnitude = 50.0;
    std::size_t synth_landmarks = 50;
    bool synth_images = false;
    std::uint64_t synth_seed = 0;
    ThreadOption synth_threads;
    synth_cmd->add_option("--out-dir", synth_dir, "Output directory")->required();
    synth_cmd->add_option("--width", synth_w)->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--height", synth_h)->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--kind", synth_kind, "translation | affine | sinusoidal | gaussian-bump")
        ->capture_default_str();
    synth_cmd->add_option("--amplitude", synth_amplitude, "Sinusoid or bump amplitude, pixels")
        ->capture_default_str();
    synth_cmd->add_option("--shift-x", synth_shift_x, "Translation dx")->capture_default_str();
    synth_cmd->add_option("--shift-y", synth_shift_y, "Translation dy")->capture_default_str();
    synth_cmd->add_option("--count", synth_count, "Match count")->capture_default_str();
    synth_cmd->add_option("--noise", synth_noise, "Match noise sigma, pixels")->capture_default_str();
    synth_cmd->add_option("--outlier-fraction", synth_fraction)->capture_default_str();
    synth_cmd->add_option("--outlier-magnitude", synth_magnitude)->capture_default_str();
    synth_cmd->add_option("--landmarks", synth_landmarks, "Landmark count")->capture_default_str();
    synth_cmd->add_flag("--images", synth_images, "Also render fixed/moving PNGs");
    synth_cmd->add_option("--seed", synth_seed)->capture_default_str();
    synth_threads.attach(synth_cmd);

    std::vector<std::string> args = args_in;
    if (args.empty()) {
        args.emplace_back("histreg");
    }
    auto argv = to_argv(args);
    try {
        app.parse(static_cast<int>(args.size()), argv.data());
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError &e) {
        app.exit(e, err, err);
        err << app.help();
        return kUsage;
    }

    try {
        if (refine->parsed()) {
            refine_threads.apply();
            std::vector<MatchSet> sets;
            for (const auto &p : refine_inputs) {
                sets.push_back(io::read_match_csv(p));
            }
            std::optional<ImageMeta> image;
            if (refine_w && refine_h) {
                image = ImageMeta{*refine_w, *refine_h};
            } else if (refine_w || refine_h) {
                err << "error: --width and --height must be given together\n";
                return kUsage;
            }
            const auto result = refinery::refine(sets, refine_filters.forest(),
                                                 refine_filters.local(image),
                                                 refine_filters.dedup_radius);
            io::write_match_csv(result.matches, refine_out);
            write_json(report_json(result.report), refine_report, out);
        } else if (dvf_cmd->parsed()) {
            dvf_threads.apply();
            const auto matches = io::read_match_csv(dvf_matches);
            const auto model = dvf::tps_fit(matches, dvf_lambda);
            const auto raster = dvf::rasterize(model, {dvf_w, dvf_h});
            io::write_dvf(raster, dvf_out);
            const auto jac = dvf::jacobian_stats(raster);
            Json j;
            j["controls"] = model.controls.size();
            j["lambda"] = number(model.lambda);
            j["jacobian"] = {{"min", number(jac.min)},
                             {"mean", number(jac.mean)},
                             {"negative_fraction", number(jac.negative_fraction)}};
            write_json(j, dvf_report, out);
        } else if (warp_cmd->parsed()) {
            warp_threads.apply();
            const auto moving = io::read_image(warp_image);
            const auto field = io::read_dvf(warp_dvf);
            io::write_image(warp::warp(moving, field), warp_out);
        } else if (board_cmd->parsed()) {
            const auto a = io::read_image(board_a);
            const auto b = io::read_image(board_b);
            io::write_image(warp::checkerboard(a, b, board_tile), board_out);
        } else if (eval_cmd->parsed()) {
            if (eval_pred.size() != eval_truth.size()) {
                err << "error: --pred and --truth must be given the same number of times\n";
                return kUsage;
            }
            auto dim = [&](const std::vector<std::uint32_t> &v, std::size_t i) -> std::optional<std::uint32_t> {
                if (v.size() == 1) {
                    return v[0];
                }
                if (v.size() == eval_pred.size()) {
                    return v[i];
                }
                return std::nullopt;
            };
            std::vector<evaluation::PairInput> pairs;
            for (std::size_t i = 0; i < eval_pred.size(); ++i) {
                const auto w = dim(eval_w, i);
                const auto h = dim(eval_h, i);
                if (!w || !h) {
                    err << "error: give --width/--height once or once per pair\n";
                    return kUsage;
                }
                pairs.push_back({io::read_landmarks_csv(eval_pred[i]),
                                 io::read_landmarks_csv(eval_truth[i]), ImageMeta{*w, *h}});
            }
            const auto mode =
                eval_squared ? evaluation::ErrorMode::Squared : evaluation::ErrorMode::Euclidean;
            const auto report = evaluation::evaluate(pairs, mode);
            Json j;
            j["mode"] = eval_squared ? "squared" : "euclidean";
            Json agg;
            for (std::size_t k = 0; k < evaluation::kAggregateNames.size(); ++k) {
                agg[evaluation::kAggregateNames[k]] = number(report.aggregates[k]);
            }
            j["aggregates"] = agg;
            Json per_pair = Json::array();
            for (std::size_t i = 0; i < report.pairs.size(); ++i) {
                const auto &p = report.pairs[i];
                Json pj;
                pj["pred"] = eval_pred[i];
                pj["truth"] = eval_truth[i];
                pj["average"] = number(p.summary.average);
                pj["median"] = number(p.summary.median);
                pj["max"] = number(p.summary.max);
                Json list = Json::array();
                for (double v : p.rtre) {
                    list.push_back(number(v));
                }
                pj["rtre"] = list;
                per_pair.push_back(pj);
            }
            j["pairs"] = per_pair;
            write_json(j, eval_out, out);
        } else if (transfer_cmd->parsed()) {
            const auto landmarks = io::read_landmarks_csv(transfer_in);
            const auto field = io::read_dvf(transfer_dvf);
            io::write_landmarks_csv(evaluation::transfer_landmarks(landmarks, field), transfer_out);
        } else if (overlay_cmd->parsed()) {
            const auto img = io::read_image(overlay_image);
            io::write_image(warp::overlay_landmarks(img, io::read_landmarks_csv(overlay_pred),
                                                    io::read_landmarks_csv(overlay_truth)),
                            overlay_out);
        } else if (pipe_cmd->parsed()) {
            pipe_threads.apply();
            const auto moving = io::read_image(pipe_moving);
            const auto fixed = io::read_image(pipe_fixed);
            multiscale::PyramidConfig cfg;
            cfg.forest = pipe_filters.forest();
            cfg.local = pipe_filters.local(fixed.meta);
            cfg.dedup_radius = pipe_filters.dedup_radius;
            cfg.max_windows_per_level = pipe_windows;
            cfg.max_levels = pipe_levels;
            multiscale::ProcessMatcher matcher(pipe_matcher);
            const auto result = multiscale::run_pyramid(moving, fixed, matcher, cfg);
            io::write_match_csv(result.matches, pipe_out);
            Json levels = Json::array();
            for (const auto &l : result.levels) {
                levels.push_back({{"level", l.level},
                                  {"windows", l.windows},
                                  {"returned", l.returned},
                                  {"carried", l.carried_out},
                                  {"skipped", l.skipped}});
            }
            Json j;
            j["levels"] = levels;
            j["matches"] = result.matches.size();
            write_json(j, pipe_report, out);
        } else if (synth_cmd->parsed()) {
            synth_threads.apply();
            namespace fs = std::filesystem;
            const fs::path dir = synth_dir;
            fs::create_directories(dir);
            const ImageMeta meta{synth_w, synth_h};
            synthetic::FieldParams params;
            params.amplitude = synth_amplitude;
            params.shift = {synth_shift_x, synth_shift_y};
            const auto field = synthetic::make_field_closure(
                meta, synthetic::parse_field_kind(synth_kind), params, synth_seed);
            const auto gen = synthetic::make_matches(field, meta, synth_count, synth_noise,
                                                     synth_fraction, synth_magnitude, synth_seed);
            io::write_match_csv(gen.matches, dir / "matches.csv");
            std::string labels = "index,outlier\n";
            for (std::size_t i = 0; i < gen.outlier.size(); ++i) {
                labels += std::to_string(i) + ',' + (gen.outlier[i] ? "1" : "0") + '\n';
            }
            io::write_text_file(dir / "labels.csv", labels);
            const auto fixed_lm = synthetic::make_landmarks(meta, synth_landmarks, synth_seed);
            io::write_landmarks_csv(fixed_lm, dir / "landmarks_fixed.csv");
            io::write_landmarks_csv(synthetic::map_landmarks(fixed_lm, field),
                                    dir / "landmarks_moving.csv");
            io::write_dvf(synthetic::make_field(meta, field), dir / "field.dvf");
            if (synth_images) {
                const auto images = synthetic::make_image_pair(meta, field, synth_seed);
                io::write_image(images.fixed, dir / "fixed.png");
                io::write_image(images.moving, dir / "moving.png");
            }
            Json j;
            j["kind"] = synthetic::to_string(field.kind());
            j["width"] = synth_w;
            j["height"] = synth_h;
            j["matches"] = gen.matches.size();
            j["outliers"] = std::count(gen.outlier.begin(), gen.outlier.end(), true);
            j["landmarks"] = fixed_lm.size();
            write_json(j, "", out);
        }
    } catch (const MatcherUnavailable &e) {
        err << "error: " << e.what() << '\n';
        return kMatcherFailure;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}

}  // namespace histreg::cli
