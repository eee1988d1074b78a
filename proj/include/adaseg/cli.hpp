#pragma once

// Command implementations behind the `adaseg` executable. Each command takes
// its arguments (without the command name) and the output streams, and
// returns a process exit status.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "adaseg/harness.hpp"
#include "adaseg/image_io.hpp"
#include "adaseg/solver.hpp"
#include "adaseg/synth.hpp"

namespace adaseg::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kIo = 2,
    kNumerical = 3,
};

namespace detail {

/// Parses `args` with `app`; returns an exit code when the command should stop.
inline std::optional<int> parse(CLI::App& app, const std::vector<std::string>& args,
                                std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{app.get_name().c_str()};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << app.get_name() << ": " << e.what() << '\n' << "run with --help for usage\n";
        return kUsage;
    }
    return std::nullopt;
}

/// Maps library exceptions to exit codes with a one-line diagnostic.
template <typename F>
int guarded(const std::string& cmd, std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ParameterError& e) {
        err << cmd << ": " << e.what() << '\n';
        return kUsage;
    } catch (const IoError& e) {
        err << cmd << ": " << e.what() << '\n';
        return kIo;
    } catch (const Error& e) {
        err << cmd << ": " << e.what() << '\n';
        return kNumerical;
    }
}

inline void add_solver_flags(CLI::App& app, SolverConfig& cfg, bool& no_scaling) {
    app.add_option("--mu", cfg.mu, "Split Bregman penalty mu")->capture_default_str();
    app.add_option("--alpha", cfg.alpha, "Foreground threshold on u")->capture_default_str();
    app.add_option("--tol", cfg.tol, "Outer stopping tolerance")->capture_default_str();
    app.add_option("--maxit", cfg.maxit, "Maximum outer iterations")->capture_default_str();
    app.add_option("--tol-gs", cfg.tol_gs, "Gauss-Seidel relative tolerance")
        ->capture_default_str();
    app.add_option("--maxit-gs", cfg.maxit_gs, "Maximum Gauss-Seidel sweeps")
        ->capture_default_str();
    app.add_option("--prox-weight", cfg.prox_weight, "Proximal weight of the u-subproblem")
        ->capture_default_str();
    app.add_flag("--no-scaling", no_scaling, "Use the weights unscaled");
}

inline std::optional<std::pair<std::size_t, std::size_t>> parse_size(const std::string& s) {
    const auto x = s.find_first_of("xX");
    if (x == std::string::npos) return std::nullopt;
    const auto m = parse_int(std::string_view(s).substr(0, x));
    const auto n = parse_int(std::string_view(s).substr(x + 1));
    if (!m || !n || *m <= 0 || *n <= 0) return std::nullopt;
    return std::pair{static_cast<std::size_t>(*m), static_cast<std::size_t>(*n)};
}

inline void print_run_line(std::ostream& out, const ReportRow& r, bool converged) {
    out << "image=" << r.image << " strategy=" << r.strategy
        << " lambda_min=" << format_double(r.lambda_min.value_or(0))
        << " lambda_max=" << format_double(r.lambda_max.value_or(0))
        << " mu=" << format_double(r.mu.value_or(0)) << " it=" << r.it.value_or(0)
        << " it_gs_mean=" << format_double(r.it_gs_mean.value_or(0));
    if (r.dice) out << " dice=" << format_double(*r.dice) << " jaccard=" << format_double(*r.jaccard);
    if (r.wall_ms) out << " wall_ms=" << format_double(*r.wall_ms);
    out << " converged=" << (converged ? "yes" : "no") << '\n';
}

} // namespace detail

inline int cmd_segment(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Segment a grayscale image into two phases", "adaseg segment"};
    RunSpec spec;
    bool no_scaling = false;
    bool no_timing = false;
    std::string out_u, out_lambda, trace_path, truth;
    app.add_option("--input", spec.image, "Input PGM image")->required();
    app.add_option("--strategy", spec.strategy, "Weight rule")
        ->check(CLI::IsMember({"cen", "ctd", "mm", "thr"}))
        ->capture_default_str();
    app.add_option("--lambda", spec.lambda, "Constant weight (cen)");
    app.add_option("--lambda-min", spec.lambda_min, "Lower weight bound (ctd, mm, thr)");
    app.add_option("--lambda-max", spec.lambda_max, "Upper weight bound (ctd, mm, thr)");
    detail::add_solver_flags(app, spec.cfg, no_scaling);
    std::string out_mask;
    app.add_option("--out-mask", out_mask, "Output mask (PGM, foreground 255)")->required();
    app.add_option("--out-u", out_u, "Output relaxed indicator u as 8-bit PGM");
    app.add_option("--out-lambda-map", out_lambda, "Output weight map heat image (adaptive only)");
    app.add_option("--trace", trace_path, "Output convergence table");
    app.add_option("--truth", truth, "Ground-truth mask for Dice/Jaccard");
    app.add_option("--id", spec.id, "Image id used in the report line");
    app.add_flag("--no-timing", no_timing, "Omit wall time from the report line");
    if (auto rc = detail::parse(app, args, out, err)) return *rc;

    return detail::guarded("segment", err, [&]() {
        if (no_scaling) spec.cfg.scaling = LambdaScaling::None;
        const Strategy strategy =
            make_strategy(spec.strategy, spec.lambda, spec.lambda_min, spec.lambda_max);
        if (!out_lambda.empty() && !strategy.bounds())
            throw ParameterError("--out-lambda-map needs an adaptive strategy with bounds");

        const auto start = std::chrono::steady_clock::now();
        const ImageGrid image = load_image(spec.image);
        const SegmentationResult res = segment(image, strategy, spec.cfg);
        std::optional<Overlap> overlap;
        if (!truth.empty()) overlap = dice_jaccard(res.mask, load_mask(truth));
        const double wall =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();

        save_mask(res.mask, out_mask);
        if (!out_u.empty()) save_image(res.u_final, out_u);
        if (!out_lambda.empty())
            save_lambda_heatmap(res.raw_lambda, *strategy.bounds(), out_lambda);
        if (!trace_path.empty()) {
            std::ofstream tf(trace_path);
            if (!tf) throw IoError("cannot open '" + trace_path + "' for writing");
            write_trace(tf, res.history);
        }
        for (const auto& w : res.warnings) err << "segment: warning: " << w << '\n';
        detail::print_run_line(out, make_report_row(spec, res, overlap,
                                                    no_timing ? std::nullopt
                                                              : std::optional<double>(wall)),
                               res.converged);
        return static_cast<int>(kOk);
    });
}

inline int cmd_synth(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generate a synthetic two-phase image and its ground-truth mask", "adaseg synth"};
    std::string shape = "disk", size = "64x64", output, truth;
    SynthSpec spec;
    app.add_option("--shape", shape, "disk | square | two-blobs | checker")->capture_default_str();
    app.add_option("--size", size, "Image size as ROWSxCOLS")->capture_default_str();
    app.add_option("--fg", spec.fg, "Foreground intensity in [0, 1]")->capture_default_str();
    app.add_option("--bg", spec.bg, "Background intensity in [0, 1]")->capture_default_str();
    app.add_option("--seed", spec.seed, "Seed for randomized placement")->capture_default_str();
    app.add_option("--radius", spec.radius, "Disk radius in pixels");
    app.add_option("--output", output, "Output image (PGM)")->required();
    app.add_option("--truth", truth, "Output ground-truth mask (PGM)")->required();
    if (auto rc = detail::parse(app, args, out, err)) return *rc;

    return detail::guarded("synth", err, [&]() {
        const auto parsed_shape = parse_synth_shape(shape);
        if (!parsed_shape) throw ParameterError("unknown shape '" + shape + "'");
        const auto dims = detail::parse_size(size);
        if (!dims) throw ParameterError("bad --size '" + size + "', expected ROWSxCOLS");
        spec.shape = *parsed_shape;
        spec.rows = dims->first;
        spec.cols = dims->second;
        const SynthImage s = make_synthetic(spec);
        if (spec.fg == spec.bg)
            err << "synth: warning: fg equals bg, the image is constant and cannot be segmented\n";
        save_image(s.image, output);
        save_mask(s.truth, truth);
        std::size_t fg_pixels = 0;
        for (auto v : s.truth) fg_pixels += v;
        out << "wrote " << output << " and " << truth << " (" << spec.rows << "x" << spec.cols
            << ", foreground pixels " << fg_pixels << ")\n";
        return static_cast<int>(kOk);
    });
}

inline int cmd_noise(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Add seeded Gaussian noise to an image", "adaseg noise"};
    std::string input, output;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    app.add_option("--input", input, "Input PGM image")->required();
    app.add_option("--sigma", sigma, "Noise standard deviation on the 0-255 scale")->required();
    app.add_option("--seed", seed, "Generator seed")->capture_default_str();
    app.add_option("--output", output, "Output PGM image")->required();
    if (auto rc = detail::parse(app, args, out, err)) return *rc;

    return detail::guarded("noise", err, [&]() {
        if (!(sigma >= 0.0)) throw ParameterError("--sigma must be nonnegative");
        const std::string bytes = adaseg::detail::read_file(input);
        const RawImage raw = decode_pnm(bytes);
        if (sigma == 0.0) {
            adaseg::detail::write_file(output, bytes);
        } else {
            save_image(add_gaussian_noise(to_unit_grid(raw), sigma, seed), output);
        }
        return static_cast<int>(kOk);
    });
}

inline int cmd_bench(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Run every segmentation listed in a manifest and tabulate the results",
                 "adaseg bench"};
    std::string manifest, report, csv;
    unsigned jobs = 1;
    bool no_timing = false;
    app.add_option("--manifest", manifest, "Manifest file, one run per line")->required();
    app.add_option("--report", report, "Aligned text report (stdout when omitted)");
    app.add_option("--csv", csv, "Comma-separated report");
    app.add_option("--jobs", jobs, "Concurrent runs")->capture_default_str();
    app.add_flag("--no-timing", no_timing, "Leave wall_ms empty so reports are reproducible");
    if (auto rc = detail::parse(app, args, out, err)) return *rc;

    return detail::guarded("bench", err, [&]() {
        std::ifstream in(manifest);
        if (!in) throw IoError("cannot open manifest '" + manifest + "'");
        const auto entries =
            parse_manifest(in, std::filesystem::path(manifest).parent_path());
        if (entries.empty()) err << "bench: warning: manifest has no runs\n";
        const auto rows = run_manifest(entries, jobs, !no_timing);

        if (report.empty()) {
            write_report_text(out, rows);
        } else {
            std::ofstream rf(report);
            if (!rf) throw IoError("cannot open '" + report + "' for writing");
            write_report_text(rf, rows);
        }
        if (!csv.empty()) {
            std::ofstream cf(csv);
            if (!cf) throw IoError("cannot open '" + csv + "' for writing");
            write_report_csv(cf, rows);
        }
        std::size_t failed = 0;
        for (const auto& r : rows)
            if (!r.ok()) {
                ++failed;
                err << "bench: " << r.image << ": " << r.status << '\n';
            }
        if (!rows.empty() && failed == rows.size()) return static_cast<int>(kNumerical);
        return static_cast<int>(kOk);
    });
}

inline void print_usage(std::ostream& os) {
    os << "usage: adaseg <command> [options]\n\n"
          "commands:\n"
          "  segment   segment a grayscale image (cen, ctd, mm or thr weights)\n"
          "  synth     generate a synthetic image with ground truth\n"
          "  noise     add seeded Gaussian noise to an image\n"
          "  bench     run a manifest of segmentations and write a report\n\n"
          "run 'adaseg <command> --help' for the options of a command\n";
}

/// Dispatches on args[0].
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    if (args.empty()) {
        print_usage(err);
        return kUsage;
    }
    const std::string& cmd = args.front();
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    if (cmd == "segment") return cmd_segment(rest, out, err);
    if (cmd == "synth") return cmd_synth(rest, out, err);
    if (cmd == "noise") return cmd_noise(rest, out, err);
    if (cmd == "bench") return cmd_bench(rest, out, err);
    if (cmd == "--help" || cmd == "-h" || cmd == "help") {
        print_usage(out);
        return kOk;
    }
    err << "adaseg: unknown command '" << cmd << "'\n";
    print_usage(err);
    return kUsage;
}

} // namespace adaseg::cli
