#include "ringcal/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ringcal::io {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ValidationError(where + ": not a finite number: '" + s + "'");
    return v;
}

long parse_long(const std::string& s, const std::string& where) {
    long v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end) throw ValidationError(where + ": not an integer: '" + s + "'");
    return v;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read " + path.string());
    return in;
}

// Reads data lines, skipping blanks; the header must match exactly.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header,
                                               std::string* units = nullptr) {
    std::ifstream in = open_in(path);
    std::string line;
    bool have_header = false;
    std::vector<std::vector<std::string>> rows;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (!have_header) {
            if (units && t.rfind("units=", 0) == 0) {
                *units = trim(t.substr(6));
                continue;
            }
            if (split(t, ',') != header)
                throw ValidationError(path.string() + ": unexpected header '" + t + "'");
            have_header = true;
            continue;
        }
        auto cells = split(t, ',');
        if (cells.size() != header.size())
            throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                  std::to_string(header.size()) + " fields");
        rows.push_back(std::move(cells));
    }
    if (!have_header) throw ValidationError(path.string() + ": empty file");
    return rows;
}

}  // namespace

std::string format_number(double x) {
    if (x == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& x) { return x ? format_number(*x) : std::string(); }

std::map<std::string, std::string> read_key_values(const fs::path& path, const std::vector<std::string>& allowed) {
    std::ifstream in = open_in(path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ValidationError(path.string() + ": expected key=value, got '" + t + "'");
        std::string key = trim(t.substr(0, eq));
        if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError(path.string() + ": unknown key '" + key + "'");
        if (!kv.emplace(key, trim(t.substr(eq + 1))).second)
            throw ValidationError(path.string() + ": duplicate key '" + key + "'");
    }
    return kv;
}

fs::path meta_path_for(const fs::path& csv) {
    fs::path p = csv;
    p.replace_extension(".meta");
    return p;
}

RawTrajectorySet read_trajectories(const fs::path& csv, const fs::path& meta) {
    const auto kv = read_key_values(meta, {"dt", "circumference", "vehicle_lengths", "units"});
    for (const char* key : {"dt", "circumference", "vehicle_lengths"})
        if (!kv.count(key)) throw ValidationError(meta.string() + ": missing key '" + key + "'");

    RawTrajectorySet raw;
    raw.dt = parse_double(kv.at("dt"), "dt");
    raw.circumference = parse_double(kv.at("circumference"), "circumference");
    for (const auto& cell : split(kv.at("vehicle_lengths"), ','))
        raw.lengths.push_back(parse_double(cell, "vehicle_lengths"));

    std::string units = kv.count("units") ? kv.at("units") : "m";
    std::ifstream probe = open_in(csv);
    std::string first;
    while (std::getline(probe, first) && trim(first).empty()) {
    }
    if (trim(first).rfind("units=", 0) == 0) units = trim(trim(first).substr(6));
    if (units != "m" && units != "rad") throw ValidationError(csv.string() + ": units must be m or rad");
    const bool radians = units == "rad";

    std::string dummy;
    const auto rows = read_csv(csv, {"t_index", "vehicle_id", radians ? "position_rad" : "position_m"}, &dummy);
    if (rows.empty()) throw ValidationError(csv.string() + ": no samples");

    long max_t = -1;
    long max_id = -1;
    for (const auto& r : rows) {
        const long t = parse_long(r[0], "t_index");
        const long id = parse_long(r[1], "vehicle_id");
        if (t < 0 || id < 0) throw ValidationError(csv.string() + ": negative index");
        max_t = std::max(max_t, t);
        max_id = std::max(max_id, id);
    }
    const auto n = static_cast<std::size_t>(max_id + 1);
    if (n != raw.lengths.size())
        throw ValidationError("vehicle_lengths has " + std::to_string(raw.lengths.size()) + " entries but the CSV has " +
                              std::to_string(n) + " vehicles");
    if (rows.size() != n * static_cast<std::size_t>(max_t + 1))
        throw ValidationError(csv.string() + ": every vehicle needs every time index exactly once");

    raw.positions = Matrix::Constant(static_cast<Eigen::Index>(n), max_t + 1, std::numeric_limits<double>::quiet_NaN());
    const double scale = radians ? raw.circumference / (2.0 * std::numbers::pi) : 1.0;
    for (const auto& r : rows) {
        const long t = parse_long(r[0], "t_index");
        const long id = parse_long(r[1], "vehicle_id");
        double& slot = raw.positions(id, t);
        if (!std::isnan(slot)) throw ValidationError(csv.string() + ": duplicate sample");
        slot = parse_double(r[2], "position") * scale;
    }
    raw.validate();
    return raw;
}

void write_trajectories(const RawTrajectorySet& raw, const fs::path& csv, const fs::path& meta) {
    std::ofstream out = open_out(csv);
    out << "t_index,vehicle_id,position_m\n";
    for (long t = 0; t < raw.sample_count(); ++t)
        for (std::size_t i = 0; i < raw.vehicle_count(); ++i)
            out << t << ',' << i << ',' << format_number(raw.positions(static_cast<Eigen::Index>(i), t)) << '\n';

    std::ofstream m = open_out(meta);
    m << "dt=" << format_number(raw.dt) << '\n';
    m << "circumference=" << format_number(raw.circumference) << '\n';
    m << "vehicle_lengths=";
    for (std::size_t i = 0; i < raw.lengths.size(); ++i) m << (i ? "," : "") << format_number(raw.lengths[i]);
    m << '\n';
}

RawTrajectorySet trajectories_of(const SimOutput& out) {
    RawTrajectorySet raw;
    raw.dt = out.config.ring.dt;
    raw.circumference = out.config.ring.circumference;
    raw.lengths = out.config.ring.lengths;
    raw.positions = out.x;
    return raw;
}

void write_smoothed(const PerceivedDataset& ds, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "t_index,vehicle_id,x1,v2,a2\n";
    auto cell = [](const Series& s, long t) { return s.contains(t) ? format_number(s.at(t)) : std::string(); };
    for (long t = ds.first; t <= ds.last; ++t)
        for (std::size_t i = 0; i < ds.vehicle_count(); ++i) {
            const VehicleSeries& s = ds.series[i];
            out << t << ',' << i << ',' << cell(s.x1, t) << ',' << cell(s.v2, t) << ',' << cell(s.a2, t) << '\n';
        }
}

void write_perceived(const PerceivedDataset& ds, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "t_index,vehicle_id,pred_id,self_pos,self_vel,pred_pos,pred_vel,foll_pos,foll_vel\n";
    for (long t = ds.first; t <= ds.last; ++t)
        for (std::size_t i = 0; i < ds.vehicle_count(); ++i) {
            const PerceivedState& s = ds.states[i][static_cast<std::size_t>(t - ds.first)];
            out << t << ',' << i << ',';
            if (s.pred) out << ds.predecessor[i];
            out << ',' << format_number(s.self_pos) << ',' << format_number(s.self_vel) << ',';
            if (s.pred) out << format_number(s.pred->pos) << ',' << format_number(s.pred->vel);
            else out << ',';
            out << ',';
            if (s.foll) out << format_number(s.foll->pos) << ',' << format_number(s.foll->vel);
            else out << ',';
            out << '\n';
        }
}

void write_results(const std::vector<CalibrationResult>& results, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "vehicle_id,sigma_nu,sigma_a,v_star,kappa_v,objective,converged\n";
    for (const auto& r : results) {
        const Eigen::Vector4d p = r.theta_hat.free_vector();
        out << r.vehicle_id;
        for (int j = 0; j < 4; ++j) out << ',' << format_number(p[j]);
        out << ',' << format_number(r.objective) << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

std::vector<CalibrationResult> read_results(const fs::path& csv, const DriverParams& base) {
    const auto rows = read_csv(csv, {"vehicle_id", "sigma_nu", "sigma_a", "v_star", "kappa_v", "objective", "converged"});
    std::vector<CalibrationResult> out;
    for (const auto& r : rows) {
        CalibrationResult res;
        const long id = parse_long(r[0], "vehicle_id");
        if (id < 0) throw ValidationError(csv.string() + ": negative vehicle_id");
        res.vehicle_id = static_cast<std::size_t>(id);
        Eigen::Vector4d p;
        for (int j = 0; j < 4; ++j) p[j] = parse_double(r[static_cast<std::size_t>(j) + 1], std::string(kFreeParamNames[static_cast<std::size_t>(j)]));
        res.theta_hat = base;
        res.theta_hat.set_free_vector(p);
        res.objective = r[5] == "-inf" ? -std::numeric_limits<double>::infinity() : parse_double(r[5], "objective");
        res.converged = parse_long(r[6], "converged") != 0;
        out.push_back(std::move(res));
    }
    return out;
}

void write_filtered(const CalibrationResult& result, long first_t, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "t_index,x_mean,v_mean,a_mean,x_sd,v_sd,a_sd\n";
    for (std::size_t k = 0; k < result.filtered.size(); ++k) {
        const FilterState& s = result.filtered[k];
        out << first_t + static_cast<long>(k);
        for (int j = 0; j < 3; ++j) out << ',' << format_number(s.mean[j]);
        for (int j = 0; j < 3; ++j) out << ',' << format_number(std::sqrt(std::max(s.cov(j, j), 0.0)));
        out << '\n';
    }
}

void write_speed_profile(const SpeedProfile& p, long first_t, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "t_index,v_avg,v_min,v_max,v_range\n";
    for (long k = 0; k < p.size(); ++k)
        out << first_t + k << ',' << format_number(p.v_avg[k]) << ',' << format_number(p.v_min[k]) << ','
            << format_number(p.v_max[k]) << ',' << format_number(p.v_range[k]) << '\n';
}

void write_wave_metrics(const WaveMetrics& m, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "backward_wave_speed,mean_queue_length,queue_event_frequency,quasi_period_amplitude,tracks\n";
    out << format_optional(m.backward_wave_speed) << ',' << format_number(m.mean_queue_length) << ','
        << format_number(m.queue_event_frequency) << ',' << format_number(m.quasi_period_amplitude) << ',' << m.tracks
        << '\n';
}

void write_clusters(const std::vector<int>& labels, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "vehicle_id,cluster\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

void write_merge_tree(const std::vector<MergeStep>& tree, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "merge,left,right,height,size\n";
    for (std::size_t m = 0; m < tree.size(); ++m)
        out << m << ',' << tree[m].left << ',' << tree[m].right << ',' << format_number(tree[m].height) << ','
            << tree[m].size << '\n';
}

void write_fundamental_diagram(const std::vector<FundamentalDiagramPoint>& pts, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "density,mean_speed,flow\n";
    for (const auto& p : pts)
        out << format_number(p.density) << ',' << format_number(p.mean_speed) << ',' << format_number(p.flow) << '\n';
}

void write_recovery(const std::vector<RecoveryRow>& rows, const fs::path& csv) {
    std::ofstream out = open_out(csv);
    out << "parameter,truth,mean_error,sd_error,mean_abs_error,biased\n";
    for (const auto& r : rows)
        out << r.name << ',' << format_number(r.truth) << ',' << format_number(r.mean_error) << ','
            << format_number(r.sd_error) << ',' << format_number(r.mean_abs_error) << ',' << (r.biased ? 1 : 0) << '\n';
}

DriverParams read_truth(const fs::path& path, const DriverParams& base) {
    std::vector<std::string> keys(kFreeParamNames.begin(), kFreeParamNames.end());
    const auto kv = read_key_values(path, keys);
    Eigen::Vector4d p = base.free_vector();
    for (std::size_t j = 0; j < 4; ++j) {
        auto it = kv.find(keys[j]);
        if (it == kv.end()) throw ValidationError(path.string() + ": missing key '" + keys[j] + "'");
        p[static_cast<Eigen::Index>(j)] = parse_double(it->second, keys[j]);
    }
    DriverParams out = base;
    out.set_free_vector(p);
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out = open_out(path);
    out << text;
}

}  // namespace ringcal::io
