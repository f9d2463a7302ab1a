#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ptf/agents/policy.hpp"

namespace ptf::harness {

// Policy file layout, version 1:
//   "PTFPOL 1 <action-tag> <input> <hidden...> <output>\n"
//   payload: 8-byte little-endian doubles, per layer weights row-major then
//            bias; a continuous tag appends the log_std vector last
//   trailer: FNV-1a 64 of the payload bytes, little-endian
inline constexpr const char* kPolicyMagic = "PTFPOL";
inline constexpr int kPolicyVersion = 1;

inline std::uint64_t fnv1a64(const unsigned char* data, std::size_t n) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

namespace detail {

inline void append_le_double(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

inline double read_le_double(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::vector<std::string> param_order(const nn::MlpSpec& spec, bool continuous) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        names.push_back(nn::layer_w(static_cast<int>(i)));
        names.push_back(nn::layer_b(static_cast<int>(i)));
    }
    for (std::size_t j = 0; j < spec.heads.size(); ++j) {
        names.push_back(nn::head_w(static_cast<int>(j)));
        names.push_back(nn::head_b(static_cast<int>(j)));
    }
    if (continuous) names.push_back(agents::kLogStdParam);
    return names;
}

}  // namespace detail

inline void atomic_write(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot open for writing: " + tmp);
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw ConfigError("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline void save_policy(const std::string& path, const nn::MlpSpec& spec,
                        const nn::ParameterStore& store, const agents::ActionSpace& space) {
    if (spec.heads.size() != 1) throw ConfigError("policy files carry single-head actors");
    std::ostringstream header;
    header << kPolicyMagic << ' ' << kPolicyVersion << ' '
           << (space.discrete ? "discrete:" : "continuous:") << space.n << ' ' << spec.input;
    for (int h : spec.hidden) header << ' ' << h;
    header << ' ' << spec.heads[0].width << '\n';

    std::string blob = header.str();
    std::string payload;
    for (const std::string& name : detail::param_order(spec, !space.discrete)) {
        const Tensor& t = store.value(name);
        for (int i = 0; i < t.numel(); ++i) detail::append_le_double(payload, t[i]);
    }
    const std::uint64_t checksum =
        fnv1a64(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());
    blob += payload;
    for (int b = 0; b < 8; ++b) blob.push_back(static_cast<char>((checksum >> (8 * b)) & 0xff));
    atomic_write(path, blob);
}

inline agents::SourcePolicy load_policy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open policy file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw ParseError(path + ": missing policy header");
    std::istringstream hs(header);
    std::string magic, tag;
    int version = -1;
    hs >> magic >> version >> tag;
    if (magic != kPolicyMagic) throw ParseError(path + ": not a policy file");
    if (version != kPolicyVersion)
        throw ParseError(path + ": unsupported policy version " + std::to_string(version));
    agents::ActionSpace space;
    if (tag.rfind("discrete:", 0) == 0) {
        space = {true, std::stoi(tag.substr(9))};
    } else if (tag.rfind("continuous:", 0) == 0) {
        space = {false, std::stoi(tag.substr(11))};
    } else {
        throw ParseError(path + ": bad action tag '" + tag + "'");
    }
    std::vector<int> dims;
    int d;
    while (hs >> d) dims.push_back(d);
    if (dims.size() < 2) throw ParseError(path + ": header needs input and output widths");
    if (dims.back() != space.n) throw ParseError(path + ": output width does not match action tag");

    nn::MlpSpec spec;
    spec.input = dims.front();
    spec.hidden.assign(dims.begin() + 1, dims.end() - 1);
    spec.heads = {{space.n, space.discrete ? nn::Activation::Softmax : nn::Activation::Tanh}};
    spec.validate();

    std::size_t count = spec.param_count();
    if (!space.discrete) count += static_cast<std::size_t>(space.n);
    std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::size_t payload_bytes = count * 8;
    if (rest.size() != payload_bytes + 8)
        throw ParseError(path + ": truncated or oversized payload (" + std::to_string(rest.size()) +
                         " bytes, expected " + std::to_string(payload_bytes + 8) + ")");
    const auto* bytes = reinterpret_cast<const unsigned char*>(rest.data());
    std::uint64_t stored = 0;
    for (int b = 0; b < 8; ++b)
        stored |= static_cast<std::uint64_t>(bytes[payload_bytes + b]) << (8 * b);
    if (fnv1a64(bytes, payload_bytes) != stored) throw ParseError(path + ": checksum mismatch");

    nn::ParameterStore store;
    int in_w = spec.input;
    for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
        store.add(nn::layer_w(static_cast<int>(i)), Tensor({spec.hidden[i], in_w}));
        store.add(nn::layer_b(static_cast<int>(i)), Tensor({spec.hidden[i]}));
        in_w = spec.hidden[i];
    }
    store.add(nn::head_w(0), Tensor({space.n, in_w}));
    store.add(nn::head_b(0), Tensor({space.n}));
    if (!space.discrete) store.add(agents::kLogStdParam, Tensor({space.n}));

    std::size_t off = 0;
    for (const std::string& name : detail::param_order(spec, !space.discrete)) {
        Tensor& t = store.value(name);
        for (int i = 0; i < t.numel(); ++i, off += 8)
            t[i] = detail::read_le_double(bytes + off);
    }
    return agents::SourcePolicy(std::move(spec), std::move(store), space);
}

// One policy path per line; blank lines and '#' comments skipped; relative
// paths resolve against the manifest's directory.
inline std::vector<std::string> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open manifest: " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        std::filesystem::path p = line.substr(first, last - first + 1);
        if (p.is_relative()) p = base / p;
        out.push_back(p.string());
    }
    if (out.empty()) throw ParseError(path + ": manifest lists no policies");
    return out;
}

}  // namespace ptf::harness
