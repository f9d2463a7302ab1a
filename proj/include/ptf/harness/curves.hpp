#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>

#include "ptf/harness/metrics.hpp"

namespace ptf::harness {

struct CurveGroup {
    std::string name;  // algorithm plus transfer mode
    std::vector<std::vector<double>> returns;   // per seed, per episode (smoothed)
    std::vector<std::vector<double>> switches;  // per seed, per episode (raw)
    std::vector<double> mean, lo, hi;           // aggregated over seeds
    std::vector<double> switch_mean;
    double switch_slope = 0.0;
};

inline std::vector<double> moving_average(const std::vector<double>& xs, int window) {
    std::vector<double> out(xs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        acc += xs[i];
        if (i >= static_cast<std::size_t>(window)) acc -= xs[i - window];
        out[i] = acc / std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    }
    return out;
}

inline double least_squares_slope(const std::vector<double>& ys) {
    const std::size_t n = ys.size();
    if (n < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += i;
        sy += ys[i];
        sxx += static_cast<double>(i) * i;
        sxy += i * ys[i];
    }
    const double d = n * sxx - sx * sx;
    return d == 0.0 ? 0.0 : (n * sxy - sx * sy) / d;
}

struct CurvesResult {
    std::string csv_path;
    std::string svg_path;
    std::vector<CurveGroup> groups;
};

namespace detail {

inline std::string svg_color(std::size_t i) {
    static const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
    return kColors[i % 8];
}

inline std::string render_svg(const std::vector<CurveGroup>& groups, int window) {
    const double W = 860, H = 420, mx = 60, my = 30, plot_w = W - mx - 30, plot_h = H - 2 * my;
    const double H2 = 220;  // switch-frequency panel
    double ymin = 0.0, ymax = 1e-9;
    std::size_t n = 0;
    double smax = 1e-9;
    for (const auto& g : groups) {
        for (double v : g.mean) ymax = std::max(ymax, v);
        for (double v : g.lo) ymin = std::min(ymin, v);
        for (double v : g.hi) ymax = std::max(ymax, v);
        for (double v : g.switch_mean) smax = std::max(smax, v);
        n = std::max(n, g.mean.size());
    }
    if (n < 2) n = 2;
    auto X = [&](std::size_t i) { return mx + plot_w * static_cast<double>(i) / (n - 1); };
    auto Y = [&](double v) { return my + plot_h * (1.0 - (v - ymin) / (ymax - ymin + 1e-12)); };
    auto Y2 = [&](double v) { return H + 10 + (H2 - 40) * (1.0 - v / (smax + 1e-12)); };

    std::ostringstream s;
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H + H2
      << "' font-family='sans-serif' font-size='12'>\n";
    s << "<rect width='100%' height='100%' fill='white'/>\n";
    s << "<text x='" << mx << "' y='16'>mean discounted return (smoothing window " << window
      << ", band: 95% CI over seeds)</text>\n";
    auto axis_label = [&](double v, double y) {
        s << "<text x='4' y='" << y + 4 << "'>" << format_double(v) << "</text>\n";
        s << "<line x1='" << mx << "' y1='" << y << "' x2='" << W - 30 << "' y2='" << y
          << "' stroke='#eee'/>\n";
    };
    for (int k = 0; k <= 4; ++k) axis_label(ymin + (ymax - ymin) * k / 4.0, Y(ymin + (ymax - ymin) * k / 4.0));
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const std::string color = svg_color(gi);
        if (!g.lo.empty()) {
            s << "<polygon fill='" << color << "' fill-opacity='0.15' stroke='none' points='";
            for (std::size_t i = 0; i < g.lo.size(); ++i) s << X(i) << ',' << Y(g.lo[i]) << ' ';
            for (std::size_t i = g.hi.size(); i-- > 0;) s << X(i) << ',' << Y(g.hi[i]) << ' ';
            s << "'/>\n";
        }
        s << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < g.mean.size(); ++i) s << X(i) << ',' << Y(g.mean[i]) << ' ';
        s << "'/>\n";
        s << "<text x='" << mx + 10 << "' y='" << my + 16 + 16 * gi << "' fill='" << color << "'>"
          << g.name << "</text>\n";
        s << "<polyline fill='none' stroke='" << color << "' stroke-width='1.2' points='";
        for (std::size_t i = 0; i < g.switch_mean.size(); ++i)
            s << X(i) << ',' << Y2(g.switch_mean[i]) << ' ';
        s << "'/>\n";
    }
    s << "<text x='" << mx << "' y='" << H + 20 << "'>mean option switches per episode</text>\n";
    s << "<text x='" << mx << "' y='" << H + H2 - 6 << "'>episode (1.." << n << ")</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace detail

// Aggregates every metrics_*.csv under `in_dir` into per-episode mean and 95%
// confidence band per (algorithm, transfer) group, plus the option-switch
// series. Output is independent of file discovery order. Uneven episode
// counts within a group truncate to the shortest run, with a warning.
inline CurvesResult emit_curves(const std::string& in_dir, const std::string& out_path,
                                int window = 100) {
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(in_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("metrics_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
            files.push_back(entry.path().string());
    }
    if (files.empty()) throw ConfigError("no metrics_*.csv files under " + in_dir);
    std::sort(files.begin(), files.end());

    std::map<std::string, CurveGroup> groups;
    for (const std::string& f : files) {
        MetricsFile mf = read_metrics(f);
        std::string name = mf.header.count("algorithm") ? mf.header["algorithm"] : "unknown";
        if (mf.header.count("transfer") && mf.header["transfer"] != "off")
            name += " (" + mf.header["transfer"] + ")";
        auto& g = groups[name];
        g.name = name;
        std::vector<double> rets, sw;
        rets.reserve(mf.rows.size());
        for (const auto& r : mf.rows) {
            rets.push_back(r.discounted_return);
            sw.push_back(r.option_switches);
        }
        g.returns.push_back(moving_average(rets, window));
        g.switches.push_back(std::move(sw));
    }

    for (auto& [name, g] : groups) {
        std::size_t len = g.returns.front().size();
        for (const auto& s : g.returns) len = std::min(len, s.size());
        for (const auto& s : g.returns)
            if (s.size() != len) {
                std::cerr << "warning: uneven episode counts in group '" << name
                          << "', truncating to " << len << "\n";
                break;
            }
        const double nseeds = static_cast<double>(g.returns.size());
        g.mean.resize(len);
        g.lo.resize(len);
        g.hi.resize(len);
        g.switch_mean.resize(len);
        for (std::size_t i = 0; i < len; ++i) {
            double m = 0.0, m2 = 0.0, sm = 0.0;
            for (std::size_t k = 0; k < g.returns.size(); ++k) {
                m += g.returns[k][i];
                m2 += g.returns[k][i] * g.returns[k][i];
                sm += g.switches[k][i];
            }
            m /= nseeds;
            const double var = nseeds > 1 ? std::max(0.0, (m2 - nseeds * m * m) / (nseeds - 1)) : 0.0;
            const double half = 1.96 * std::sqrt(var / nseeds);
            g.mean[i] = m;
            g.lo[i] = m - half;
            g.hi[i] = m + half;
            g.switch_mean[i] = sm / nseeds;
        }
        g.switch_slope = least_squares_slope(g.switch_mean);
    }

    std::string base = out_path;
    for (const char* ext : {".svg", ".csv"})
        if (base.size() > 4 && base.substr(base.size() - 4) == ext)
            base = base.substr(0, base.size() - 4);
    CurvesResult res;
    res.csv_path = base + ".csv";
    res.svg_path = base + ".svg";

    std::string csv;
    csv += "# smoothing_window = " + std::to_string(window) + "\n";
    for (const auto& [name, g] : groups)
        csv += "# switch_slope [" + name + "] = " + format_double(g.switch_slope) + "\n";
    csv += "episode";
    for (const auto& [name, g] : groups)
        csv += ",mean [" + name + "],lo [" + name + "],hi [" + name + "],switches [" + name + "]";
    csv += "\n";
    std::size_t maxlen = 0;
    for (const auto& [name, g] : groups) maxlen = std::max(maxlen, g.mean.size());
    for (std::size_t i = 0; i < maxlen; ++i) {
        csv += std::to_string(i + 1);
        for (const auto& [name, g] : groups) {
            if (i < g.mean.size())
                csv += "," + format_double(g.mean[i]) + "," + format_double(g.lo[i]) + "," +
                       format_double(g.hi[i]) + "," + format_double(g.switch_mean[i]);
            else
                csv += ",,,,";
        }
        csv += "\n";
    }
    atomic_write(res.csv_path, csv);

    std::vector<CurveGroup> ordered;
    for (auto& [name, g] : groups) ordered.push_back(std::move(g));
    atomic_write(res.svg_path, detail::render_svg(ordered, window));
    res.groups = std::move(ordered);
    return res;
}

}  // namespace ptf::harness
