// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "sonarfield/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace sonarfield {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'S', 'F', 'G', '1'};
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(what + ": " + e.what(), static_cast<long long>(e.byte));
    }
}

double get_number(const json& obj, const char* key, const std::string& what) {
    const auto& v = obj.at(key);
    if (!v.is_number()) throw FormatError(what + ": '" + key + "' must be a number");
    return v.get<double>();
}

int get_int(const json& v, const char* key, const std::string& what) {
    if (!v.is_number_integer()) throw FormatError(what + ": '" + key + "' must be an integer");
    const auto i = v.get<long long>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
        throw FormatError(what + ": '" + key + "' is out of range");
    return static_cast<int>(i);
}

json require_object(const std::string& text, const std::string& what) {
    json j = parse_json(text, what);
    if (!j.is_object()) throw FormatError(what + ": expected a JSON object");
    return j;
}

} // namespace

std::string encode_sfg(const Grid& grid, SfgKind kind) {
    if (grid.rows() > std::numeric_limits<std::uint32_t>::max() || grid.cols() > std::numeric_limits<std::uint32_t>::max())
        throw DimensionError("grid too large for SFG1");
    std::string out;
    out.reserve(kHeaderSize + 4 * grid.size());
    out.append(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(grid.rows()));
    put_u32(out, static_cast<std::uint32_t>(grid.cols()));
    out.push_back(static_cast<char>(kind));
    for (double v : grid.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    return out;
}

SfgGrid decode_sfg(const std::string& bytes) {
    if (bytes.size() < 4) throw FormatError("SFG1: truncated magic at byte offset " + std::to_string(bytes.size()),
                                            static_cast<long long>(bytes.size()));
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("SFG1: bad magic at byte offset 0", 0);
    if (bytes.size() < kHeaderSize)
        throw FormatError("SFG1: truncated header at byte offset " + std::to_string(bytes.size()),
                          static_cast<long long>(bytes.size()));
    const std::uint32_t rows = get_u32(bytes, 4);
    const std::uint32_t cols = get_u32(bytes, 8);
    const auto kind = static_cast<unsigned char>(bytes[12]);
    if (kind > 1) throw FormatError("SFG1: unknown grid kind " + std::to_string(kind) + " at byte offset 12", 12);
    const std::uint64_t expected = kHeaderSize + 4ull * rows * cols;
    if (bytes.size() < expected) {
        const std::size_t complete = (bytes.size() - kHeaderSize) / 4;
        const std::size_t offset = kHeaderSize + 4 * complete;
        throw FormatError("SFG1: truncated data at byte offset " + std::to_string(offset) + " (expected " +
                              std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()) + ")",
                          static_cast<long long>(offset));
    }
    if (bytes.size() > expected)
        throw FormatError("SFG1: trailing bytes at byte offset " + std::to_string(expected),
                          static_cast<long long>(expected));

    SfgGrid out;
    out.kind = static_cast<SfgKind>(kind);
    out.grid = Grid(rows, cols);
    auto vals = out.grid.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const float f = std::bit_cast<float>(get_u32(bytes, kHeaderSize + 4 * i));
        if (!std::isfinite(f)) {
            const std::size_t offset = kHeaderSize + 4 * i;
            throw FormatError("SFG1: non-finite value at byte offset " + std::to_string(offset),
                              static_cast<long long>(offset));
        }
        vals[i] = f;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "': " + std::strerror(errno));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing: " + std::strerror(errno));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    write_file(tmp, bytes);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

void write_sfg(const std::string& path, const Grid& grid, SfgKind kind) { write_file(path, encode_sfg(grid, kind)); }

SfgGrid read_sfg(const std::string& path) {
    try {
        return decode_sfg(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what(), e.offset());
    }
}

Grid read_sfg_as(const std::string& path, SfgKind kind, std::size_t rows, std::size_t cols) {
    SfgGrid g = read_sfg(path);
    if (g.kind != kind)
        throw FormatError(path + ": expected " + (kind == SfgKind::Image ? "an image" : "a height field") +
                              " grid (kind byte at offset 12)",
                          12);
    if (rows != 0 && (g.grid.rows() != rows || g.grid.cols() != cols))
        throw DimensionError(path + ": grid is " + std::to_string(g.grid.rows()) + "x" +
                             std::to_string(g.grid.cols()) + ", expected " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    return std::move(g.grid);
}

std::string encode_pgm(const Grid& grid, bool normalize) {
    double lo = 0.0;
    double scale = 1.0;
    if (normalize && !grid.empty()) {
        const auto [mn, mx] = std::minmax_element(grid.values().begin(), grid.values().end());
        lo = *mn;
        scale = *mx > *mn ? 1.0 / (*mx - *mn) : 0.0;
    }
    std::string out = "P5\n" + std::to_string(grid.cols()) + " " + std::to_string(grid.rows()) + "\n255\n";
    out.reserve(out.size() + grid.size());
    for (double v : grid.values()) {
        const double level = std::round(255.0 * ((v - lo) * scale));
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0.0, 255.0))));
    }
    return out;
}

void write_pgm(const std::string& path, const Grid& grid, bool normalize) { write_file(path, encode_pgm(grid, normalize)); }

std::string config_to_json(const SonarConfig& cfg) {
    json j = json::object();
    j["r_min"] = cfg.r_min;
    j["r_max"] = cfg.r_max;
    j["n_bins"] = cfg.n_bins;
    j["n_az"] = cfg.n_az;
    j["azimuth_spread_deg"] = rad_to_deg(cfg.azimuth_spread);
    j["elev_min_deg"] = rad_to_deg(cfg.elev_min);
    j["elev_max_deg"] = rad_to_deg(cfg.elev_max);
    j["n_el"] = cfg.n_el;
    j["alpha"] = cfg.alpha;
    j["sigma_bins"] = cfg.sigma_bins;
    j["gamma"] = cfg.gamma;
    j["sigma_spec_deg"] = rad_to_deg(cfg.sigma_spec);
    j["epsilon"] = cfg.epsilon;
    j["tvg_exponent"] = cfg.tvg_exponent;
    j["near_pad"] = cfg.near_pad;
    j["db_floor"] = cfg.db_floor;
    return j.dump(2) + "\n";
}

SonarConfig config_from_json(const std::string& text) {
    const std::string what = "config";
    const json j = require_object(text, what);
    RawSonarConfig raw;
    for (const auto& [key, v] : j.items()) {
        auto num = [&]() {
            if (!v.is_number()) throw FormatError(what + ": '" + key + "' must be a number");
            return v.get<double>();
        };
        if (key == "r_min") raw.r_min = num();
        else if (key == "r_max") raw.r_max = num();
        else if (key == "n_bins") raw.n_bins = get_int(v, "n_bins", what);
        else if (key == "n_az") raw.n_az = get_int(v, "n_az", what);
        else if (key == "azimuth_spread_deg") raw.azimuth_spread = deg_to_rad(num());
        else if (key == "elev_min_deg") raw.elev_min = deg_to_rad(num());
        else if (key == "elev_max_deg") raw.elev_max = deg_to_rad(num());
        else if (key == "n_el") raw.n_el = get_int(v, "n_el", what);
        else if (key == "alpha") raw.alpha = num();
        else if (key == "sigma_bins") raw.sigma_bins = num();
        else if (key == "gamma") raw.gamma = num();
        else if (key == "sigma_spec_deg") raw.sigma_spec = deg_to_rad(num());
        else if (key == "epsilon") raw.epsilon = num();
        else if (key == "tvg_exponent") raw.tvg_exponent = num();
        else if (key == "near_pad") raw.near_pad = get_int(v, "near_pad", what);
        else if (key == "db_floor") raw.db_floor = num();
        else throw FormatError(what + ": unknown key '" + key + "'");
    }
    return validate_config(raw);
}

SonarConfig load_config(const std::string& path) {
    try {
        return config_from_json(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what(), e.offset());
    }
}

void save_config(const std::string& path, const SonarConfig& cfg) { write_file(path, config_to_json(cfg)); }

std::string plane_to_json(const BasePlane& plane) {
    json j = json::object();
    j["phi_near_deg"] = rad_to_deg(plane.phi_near);
    j["phi_far_deg"] = rad_to_deg(plane.phi_far);
    return j.dump(2) + "\n";
}

BasePlane plane_from_json(const std::string& text) {
    const std::string what = "plane";
    const json j = require_object(text, what);
    for (const auto& [key, v] : j.items())
        if (key != "phi_near_deg" && key != "phi_far_deg") throw FormatError(what + ": unknown key '" + key + "'");
    if (!j.contains("phi_near_deg") || !j.contains("phi_far_deg"))
        throw FormatError(what + ": requires phi_near_deg and phi_far_deg");
    return BasePlane{deg_to_rad(get_number(j, "phi_near_deg", what)), deg_to_rad(get_number(j, "phi_far_deg", what))};
}

BasePlane load_plane(const std::string& path) {
    try {
        return plane_from_json(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what(), e.offset());
    }
}

void save_plane(const std::string& path, const BasePlane& plane) { write_file(path, plane_to_json(plane)); }

std::string gains_to_json(const BeamGains& gains) { return json(gains.gains).dump() + "\n"; }

BeamGains gains_from_json(const std::string& text) {
    const json j = parse_json(text, "gains");
    if (!j.is_array()) throw FormatError("gains: expected a JSON array of numbers");
    BeamGains g;
    for (const auto& v : j) {
        if (!v.is_number()) throw FormatError("gains: expected a JSON array of numbers");
        g.gains.push_back(v.get<double>());
    }
    return g;
}

BeamGains load_gains(const std::string& path) {
    try {
        return gains_from_json(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what(), e.offset());
    }
}

void save_gains(const std::string& path, const BeamGains& gains) { write_file(path, gains_to_json(gains)); }

std::string metrics_to_json(const MetricsReport& r) {
    json j = json::object();
    j["mcd_cm"] = 100.0 * r.mcd;
    j["rmse_cm"] = 100.0 * r.rmse;
    j["mae_cm"] = 100.0 * r.mae;
    j["mse_cm2"] = 1e4 * r.mse;
    j["n_points"] = r.n_points;
    return j.dump(2);
}

std::string loss_csv(const std::vector<double>& losses) {
    std::string out = "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, losses[i]);
        out += buf;
    }
    return out;
}

std::string manifest_to_json(const std::vector<DatasetEntry>& entries) {
    json arr = json::array();
    for (const auto& e : entries) {
        json draws = json::object();
        for (const auto& [k, v] : e.draws) draws[k] = v;
        json item = json::object();
        item["id"] = e.id;
        item["seed"] = e.seed;
        item["cfg_path"] = e.cfg_path;
        item["plane_path"] = e.plane_path;
        item["gt_path"] = e.gt_path;
        item["target_path"] = e.target_path;
        item["draws"] = std::move(draws);
        arr.push_back(std::move(item));
    }
    return arr.dump(2) + "\n";
}

std::vector<DatasetEntry> manifest_from_json(const std::string& text) {
    const json j = parse_json(text, "manifest");
    if (!j.is_array()) throw FormatError("manifest: expected a JSON array");
    std::vector<DatasetEntry> out;
    try {
        for (const auto& item : j) {
            DatasetEntry e;
            e.id = item.at("id").get<std::string>();
            e.seed = item.at("seed").get<std::uint64_t>();
            e.cfg_path = item.at("cfg_path").get<std::string>();
            e.plane_path = item.at("plane_path").get<std::string>();
            e.gt_path = item.at("gt_path").get<std::string>();
            e.target_path = item.at("target_path").get<std::string>();
            if (item.contains("draws"))
                for (const auto& [k, v] : item.at("draws").items()) e.draws.emplace_back(k, v.get<double>());
            out.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest: ") + e.what());
    }
    return out;
}

void save_manifest(const std::string& path, const std::vector<DatasetEntry>& entries) {
    write_file(path, manifest_to_json(entries));
}

std::vector<DatasetEntry> load_manifest(const std::string& path) {
    try {
        return manifest_from_json(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what(), e.offset());
    }
}

} // namespace sonarfield
