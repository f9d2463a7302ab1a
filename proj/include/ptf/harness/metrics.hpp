#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ptf/agents/trainer_common.hpp"
#include "ptf/harness/policy_io.hpp"

namespace ptf::harness {

inline constexpr const char* kMetricsColumns =
    "seed,episode,cum_steps,discounted_return,raw_return,length,option_histogram,"
    "option_switches,mean_transfer_weight,epsilon";

/// Buffers one training run's telemetry and writes it atomically on finalize:
/// a '#'-prefixed header block (resolved config), the CSV rows, and optional
/// '#'-prefixed summary lines at the end.
class MetricsWriter {
public:
    MetricsWriter(std::string path, std::string header_block) : path_(std::move(path)) {
        buf_ += header_block;
        buf_ += kMetricsColumns;
        buf_ += '\n';
    }

    void add(std::uint64_t seed, const agents::EpisodeStats& st) {
        char num[64];
        std::snprintf(num, sizeof(num), "%llu,%lld,%lld,", static_cast<unsigned long long>(seed),
                      static_cast<long long>(st.episode), static_cast<long long>(st.cum_steps));
        buf_ += num;
        append_double(st.discounted_return);
        buf_ += ',';
        append_double(st.raw_return);
        std::snprintf(num, sizeof(num), ",%d,", st.length);
        buf_ += num;
        for (std::size_t i = 0; i < st.option_hist.size(); ++i) {
            if (i) buf_ += ';';
            buf_ += std::to_string(st.option_hist[i]);
        }
        std::snprintf(num, sizeof(num), ",%d,", st.option_switches);
        buf_ += num;
        append_double(st.mean_weight);
        buf_ += ',';
        append_double(st.epsilon);
        buf_ += '\n';
    }

    void add_summary(const std::string& key, const std::string& value) {
        buf_ += "# " + key + " = " + value + "\n";
    }

    void finalize() { atomic_write(path_, buf_); }

    const std::string& path() const { return path_; }

private:
    void append_double(double v) {
        char num[64];
        std::snprintf(num, sizeof(num), "%.12g", v);
        buf_ += num;
    }

    std::string path_;
    std::string buf_;
};

struct MetricsRow {
    std::uint64_t seed = 0;
    long long episode = 0;
    long long cum_steps = 0;
    double discounted_return = 0.0;
    double raw_return = 0.0;
    int length = 0;
    std::vector<long long> option_hist;
    int option_switches = 0;
    double mean_weight = 0.0;
    double epsilon = 0.0;
};

struct MetricsFile {
    std::map<std::string, std::string> header;  // '# key = value' lines, wherever they appear
    std::vector<MetricsRow> rows;
};

inline MetricsFile read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open metrics file: " + path);
    MetricsFile mf;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                auto trim = [](std::string s) {
                    const auto a = s.find_first_not_of(" \t#");
                    if (a == std::string::npos) return std::string();
                    const auto b = s.find_last_not_of(" \t\r");
                    return s.substr(a, b - a + 1);
                };
                mf.header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
            }
            continue;
        }
        if (line.rfind("seed,", 0) == 0) continue;  // column header
        std::istringstream ls(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 10)
            throw ParseError(path + " line " + std::to_string(lineno) + ": expected 10 columns");
        MetricsRow r;
        try {
            r.seed = std::stoull(cells[0]);
            r.episode = std::stoll(cells[1]);
            r.cum_steps = std::stoll(cells[2]);
            r.discounted_return = std::stod(cells[3]);
            r.raw_return = std::stod(cells[4]);
            r.length = std::stoi(cells[5]);
            if (!cells[6].empty()) {
                std::istringstream hs(cells[6]);
                std::string h;
                while (std::getline(hs, h, ';')) r.option_hist.push_back(std::stoll(h));
            }
            r.option_switches = std::stoi(cells[7]);
            r.mean_weight = std::stod(cells[8]);
            r.epsilon = std::stod(cells[9]);
        } catch (const std::exception&) {
            throw ParseError(path + " line " + std::to_string(lineno) + ": malformed row");
        }
        mf.rows.push_back(std::move(r));
    }
    return mf;
}

}  // namespace ptf::harness
