#pragma once

// Experiment harness: run descriptions, line-oriented manifests, and the
// report table (aligned text plus comma-separated form).
//
// Manifest lines hold whitespace-separated key=value pairs; '#' starts a
// comment. Keys: id image truth strategy lambda lambda_min lambda_max mu
// alpha tol maxit tol_gs maxit_gs noise seed out_mask. Relative paths are
// resolved against the manifest's directory.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adaseg/format.hpp"
#include "adaseg/image_io.hpp"
#include "adaseg/metrics.hpp"
#include "adaseg/solver.hpp"

namespace adaseg {

struct RunSpec {
    std::string id;
    std::string image;
    std::optional<std::string> truth;
    std::string strategy = "cen";
    std::optional<double> lambda;
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    SolverConfig cfg;
    /// Gaussian noise (0-255 scale) added to the image before segmenting.
    std::optional<double> noise;
    std::uint64_t seed = 0;
    std::optional<std::string> out_mask;
};

inline Strategy make_strategy(const std::string& name, std::optional<double> lambda,
                              std::optional<double> lambda_min, std::optional<double> lambda_max) {
    if (name == "cen") {
        if (!lambda) throw ParameterError("strategy cen requires lambda");
        return Strategy::constant(*lambda);
    }
    if (name != "ctd" && name != "mm" && name != "thr")
        throw ParameterError("unknown strategy '" + name + "' (expected cen, ctd, mm or thr)");
    if (!lambda_min || !lambda_max)
        throw ParameterError("strategy " + name + " requires lambda_min and lambda_max");
    const Bounds b{*lambda_min, *lambda_max};
    if (name == "ctd") return Strategy::ctd(b);
    if (name == "mm") return Strategy::mm(b);
    return Strategy::thr(b);
}

struct ReportRow {
    std::string image;
    std::string strategy;
    std::optional<double> lambda_min;
    std::optional<double> lambda_max;
    std::optional<double> mu;
    std::optional<int> it;
    std::optional<double> it_gs_mean;
    std::optional<double> dice;
    std::optional<double> jaccard;
    std::optional<double> wall_ms;
    /// "ok" or "error: <message>".
    std::string status = "ok";

    bool ok() const { return status == "ok"; }
    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols{"image",  "strategy",   "lambda_min", "lambda_max",
                                               "mu",     "it",         "it_gs_mean", "dice",
                                               "jaccard", "wall_ms",   "status"};
    return cols;
}

/// Report row describing a successful run.
inline ReportRow make_report_row(const RunSpec& spec, const SegmentationResult& res,
                                 std::optional<Overlap> overlap, std::optional<double> wall_ms) {
    ReportRow row;
    row.image = spec.id.empty() ? spec.image : spec.id;
    row.strategy = spec.strategy;
    if (spec.strategy == "cen") {
        row.lambda_min = spec.lambda;
        row.lambda_max = spec.lambda;
    } else {
        row.lambda_min = spec.lambda_min;
        row.lambda_max = spec.lambda_max;
    }
    row.mu = spec.cfg.mu;
    row.it = res.outer_iterations;
    row.it_gs_mean = res.mean_gs_iterations;
    if (overlap) {
        row.dice = overlap->dice;
        row.jaccard = overlap->jaccard;
    }
    row.wall_ms = wall_ms;
    return row;
}

/// Loads, optionally perturbs, segments and scores one run. Exceptions propagate.
inline ReportRow execute_run(const RunSpec& spec, bool timing) {
    const auto start = std::chrono::steady_clock::now();
    const Strategy strategy = make_strategy(spec.strategy, spec.lambda, spec.lambda_min,
                                            spec.lambda_max);
    ImageGrid image = load_image(spec.image);
    if (spec.noise) image = add_gaussian_noise(image, *spec.noise, spec.seed);
    const SegmentationResult res = segment(image, strategy, spec.cfg);
    std::optional<Overlap> overlap;
    if (spec.truth) overlap = dice_jaccard(res.mask, load_mask(*spec.truth));
    if (spec.out_mask) save_mask(res.mask, *spec.out_mask);
    std::optional<double> wall;
    if (timing)
        wall = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                   .count();
    return make_report_row(spec, res, overlap, wall);
}

inline std::string sanitize_field(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ch == ',' ? ';' : ' ';
    return s;
}

inline ReportRow error_row(std::string image, std::string strategy, const std::string& message) {
    ReportRow row;
    row.image = std::move(image);
    row.strategy = std::move(strategy);
    row.status = "error: " + sanitize_field(message);
    return row;
}

inline ReportRow run_or_error(const RunSpec& spec, bool timing) {
    try {
        return execute_run(spec, timing);
    } catch (const std::exception& e) {
        return error_row(spec.id.empty() ? spec.image : spec.id, spec.strategy, e.what());
    }
}

struct ManifestEntry {
    std::size_t line = 0;
    std::optional<RunSpec> spec;
    /// Parse failure for this line when spec is empty.
    std::string error;
    std::string raw_image;
    std::string raw_strategy;
};

namespace detail {

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
    const std::filesystem::path path(p);
    if (path.is_absolute() || base.empty()) return p;
    return (base / path).string();
}

inline void apply_manifest_key(RunSpec& spec, const std::string& key, const std::string& value,
                               const std::filesystem::path& base) {
    auto number = [&]() {
        const auto v = parse_double(value);
        if (!v) throw ParameterError("key '" + key + "': not a number: '" + value + "'");
        return *v;
    };
    auto integer = [&]() {
        const auto v = parse_int(value);
        if (!v) throw ParameterError("key '" + key + "': not an integer: '" + value + "'");
        return *v;
    };
    if (key == "id") spec.id = value;
    else if (key == "image") spec.image = resolve_path(value, base);
    else if (key == "truth") spec.truth = resolve_path(value, base);
    else if (key == "out_mask") spec.out_mask = resolve_path(value, base);
    else if (key == "strategy") spec.strategy = value;
    else if (key == "lambda") spec.lambda = number();
    else if (key == "lambda_min") spec.lambda_min = number();
    else if (key == "lambda_max") spec.lambda_max = number();
    else if (key == "mu") spec.cfg.mu = number();
    else if (key == "alpha") spec.cfg.alpha = number();
    else if (key == "tol") spec.cfg.tol = number();
    else if (key == "maxit") spec.cfg.maxit = static_cast<int>(integer());
    else if (key == "tol_gs") spec.cfg.tol_gs = number();
    else if (key == "maxit_gs") spec.cfg.maxit_gs = static_cast<int>(integer());
    else if (key == "noise") spec.noise = number();
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(integer());
    else throw ParameterError("unknown key '" + key + "'");
}

} // namespace detail

inline std::vector<ManifestEntry> parse_manifest(std::istream& in,
                                                 const std::filesystem::path& base = {}) {
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream tokens(line);
        std::string tok;
        RunSpec spec;
        ManifestEntry entry;
        entry.line = lineno;
        bool any = false;
        try {
            while (tokens >> tok) {
                any = true;
                const auto eq = tok.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw ParameterError("expected key=value, got '" + tok + "'");
                const std::string key = tok.substr(0, eq);
                const std::string value = tok.substr(eq + 1);
                if (key == "image") entry.raw_image = value;
                if (key == "id") entry.raw_image = value;
                if (key == "strategy") entry.raw_strategy = value;
                detail::apply_manifest_key(spec, key, value, base);
            }
            if (!any) continue;
            if (spec.image.empty()) throw ParameterError("missing image=");
            entry.spec = std::move(spec);
        } catch (const Error& e) {
            entry.error = "line " + std::to_string(lineno) + ": " + e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

/// Runs every manifest entry; rows come back in manifest order regardless of `jobs`.
inline std::vector<ReportRow> run_manifest(const std::vector<ManifestEntry>& entries,
                                           unsigned jobs, bool timing) {
    std::vector<ReportRow> rows(entries.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t idx = next++; idx < entries.size(); idx = next++) {
            const ManifestEntry& e = entries[idx];
            rows[idx] = e.spec ? run_or_error(*e.spec, timing)
                               : error_row(e.raw_image, e.raw_strategy, e.error);
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(entries.size())));
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }
    return rows;
}

namespace detail {

inline std::string opt_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

inline std::string opt_fixed(const std::optional<double>& v, int digits) {
    if (!v) return "-";
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << *v;
    return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

inline void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
    const auto& cols = report_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
    os << '\n';
    for (const auto& r : rows) {
        os << sanitize_field(r.image) << ',' << sanitize_field(r.strategy) << ','
           << detail::opt_field(r.lambda_min) << ',' << detail::opt_field(r.lambda_max) << ','
           << detail::opt_field(r.mu) << ',' << (r.it ? std::to_string(*r.it) : std::string())
           << ',' << detail::opt_field(r.it_gs_mean) << ',' << detail::opt_field(r.dice) << ','
           << detail::opt_field(r.jaccard) << ',' << detail::opt_field(r.wall_ms) << ','
           << sanitize_field(r.status) << '\n';
    }
}

/// Inverse of write_report_csv.
inline std::vector<ReportRow> parse_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("report: missing header");
    const auto header = detail::split_csv(line);
    if (header != report_columns()) throw IoError("report: unexpected header");
    std::vector<ReportRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != header.size()) throw IoError("report: wrong field count");
        auto num = [](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            const auto v = parse_double(s);
            if (!v) throw IoError("report: bad number '" + s + "'");
            return v;
        };
        ReportRow r;
        r.image = f[0];
        r.strategy = f[1];
        r.lambda_min = num(f[2]);
        r.lambda_max = num(f[3]);
        r.mu = num(f[4]);
        if (!f[5].empty()) {
            const auto it = parse_int(f[5]);
            if (!it) throw IoError("report: bad iteration count '" + f[5] + "'");
            r.it = static_cast<int>(*it);
        }
        r.it_gs_mean = num(f[6]);
        r.dice = num(f[7]);
        r.jaccard = num(f[8]);
        r.wall_ms = num(f[9]);
        r.status = f[10];
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Human-readable table with aligned columns.
inline void write_report_text(std::ostream& os, const std::vector<ReportRow>& rows) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back(report_columns());
    for (const auto& r : rows) {
        cells.push_back({r.image, r.strategy,
                         r.lambda_min ? format_double(*r.lambda_min) : "-",
                         r.lambda_max ? format_double(*r.lambda_max) : "-",
                         r.mu ? format_double(*r.mu) : "-",
                         r.it ? std::to_string(*r.it) : "-", detail::opt_fixed(r.it_gs_mean, 1),
                         detail::opt_fixed(r.dice, 4), detail::opt_fixed(r.jaccard, 4),
                         detail::opt_fixed(r.wall_ms, 1), r.status});
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& row : cells)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            const bool last = c + 1 == row.size();
            os << std::left << std::setw(last ? 0 : static_cast<int>(width[c])) << row[c]
               << (last ? "" : "  ");
        }
        os << '\n';
    }
}

} // namespace adaseg
