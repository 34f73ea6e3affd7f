#include "ringcal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

namespace ringcal {

SpeedProfile speed_profile(const Matrix& v) {
    SpeedProfile p;
    const Eigen::Index T = v.cols();
    p.v_avg.resize(T);
    p.v_min.resize(T);
    p.v_max.resize(T);
    p.v_range.resize(T);
    if (v.rows() == 0) {
        p.v_avg.setZero();
        p.v_min.setZero();
        p.v_max.setZero();
        p.v_range.setZero();
        return p;
    }
    for (Eigen::Index t = 0; t < T; ++t) {
        p.v_avg[t] = v.col(t).mean();
        p.v_min[t] = v.col(t).minCoeff();
        p.v_max[t] = v.col(t).maxCoeff();
        p.v_range[t] = p.v_max[t] - p.v_min[t];
    }
    return p;
}

namespace {

struct SlowCluster {
    double centroid = 0.0;   // wrapped
    int size = 0;
};

double signed_ring_delta(double from, double to, double c) {
    double d = std::fmod(to - from, c);
    if (d >= 0.5 * c) d -= c;
    if (d < -0.5 * c) d += c;
    return d;
}

std::vector<SlowCluster> slow_clusters(const Matrix& x, const Matrix& v, Eigen::Index t, double threshold, double c) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return wrap_position(x(static_cast<Eigen::Index>(a), t), c) < wrap_position(x(static_cast<Eigen::Index>(b), t), c);
    });
    std::vector<bool> slow(n);
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        slow[k] = v(static_cast<Eigen::Index>(order[k]), t) < threshold;
        count += slow[k] ? 1 : 0;
    }
    std::vector<SlowCluster> out;
    if (count == 0) return out;

    auto centroid_of = [&](std::size_t begin, std::size_t len) {
        const double base = wrap_position(x(static_cast<Eigen::Index>(order[begin % n]), t), c);
        double acc = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
            const double p = x(static_cast<Eigen::Index>(order[(begin + k) % n]), t);
            acc += wrap_position(p - base, c);
        }
        return wrap_position(base + acc / static_cast<double>(len), c);
    };

    if (count == n) {
        out.push_back({centroid_of(0, n), static_cast<int>(n)});
        return out;
    }
    // start scanning just after a fast vehicle so no run straddles the start
    std::size_t start = 0;
    while (slow[start]) ++start;
    std::size_t k = 0;
    while (k < n) {
        const std::size_t idx = (start + k) % n;
        if (!slow[idx]) {
            ++k;
            continue;
        }
        std::size_t len = 0;
        while (k + len < n && slow[(start + k + len) % n]) ++len;
        out.push_back({centroid_of(start + k, len), static_cast<int>(len)});
        k += len;
    }
    return out;
}

struct Track {
    long first_t = 0;
    long last_t = 0;
    double last_centroid = 0.0;
    std::vector<double> times;
    std::vector<double> lifted;
};

}  // namespace

double quasi_period_amplitude(const Vector& series, double dt, double min_period, double max_period) {
    const Eigen::Index n = series.size();
    if (n < 4) return 0.0;
    // linear detrend
    Vector t = Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1));
    const double tm = t.mean();
    const double ym = series.mean();
    const double slope = ((t.array() - tm) * (series.array() - ym)).sum() / (t.array() - tm).square().sum();
    const Vector resid = (series.array() - ym - slope * (t.array() - tm)).matrix();

    const double duration = static_cast<double>(n) * dt;
    double best = 0.0;
    for (Eigen::Index k = 1; k <= n / 2; ++k) {
        const double period = duration / static_cast<double>(k);
        if (period < min_period || period > max_period) continue;
        std::complex<double> acc(0.0, 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n);
            acc += resid[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        best = std::max(best, 2.0 * std::abs(acc) / static_cast<double>(n));
    }
    return best;
}

WaveMetrics wave_metrics(const Matrix& x, const Matrix& v, const WaveOptions& opts) {
    require(x.rows() == v.rows() && x.cols() == v.cols(), "position and speed matrices differ in shape");
    require(opts.dt > 0.0 && opts.circumference > 0.0, "wave metrics need dt > 0 and C > 0");
    WaveMetrics m;
    const Eigen::Index T = x.cols();
    const auto n = x.rows();
    const Eigen::Index first = std::clamp<Eigen::Index>(opts.first, 0, T);
    if (n == 0 || first >= T) return m;

    const double c = opts.circumference;
    const double max_jump = std::max(10.0, 2.0 * c / static_cast<double>(n));

    std::vector<Track> finished;
    std::vector<Track> active;
    double cluster_sizes = 0.0;
    long cluster_count = 0;

    for (Eigen::Index t = first; t < T; ++t) {
        const std::vector<SlowCluster> clusters = slow_clusters(x, v, t, opts.slow_threshold, c);
        for (const auto& cl : clusters) {
            cluster_sizes += cl.size;
            ++cluster_count;
        }
        // greedy nearest matching between the live tracks and this sample's clusters
        struct Candidate {
            double dist;
            std::size_t track;
            std::size_t cluster;
        };
        std::vector<Candidate> cand;
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = 0; b < clusters.size(); ++b) {
                const double d = std::abs(signed_ring_delta(active[a].last_centroid, clusters[b].centroid, c));
                if (d <= max_jump) cand.push_back({d, a, b});
            }
        }
        std::stable_sort(cand.begin(), cand.end(), [](const Candidate& p, const Candidate& q) { return p.dist < q.dist; });
        std::vector<bool> track_used(active.size(), false);
        std::vector<bool> cluster_used(clusters.size(), false);
        for (const auto& cd : cand) {
            if (track_used[cd.track] || cluster_used[cd.cluster]) continue;
            track_used[cd.track] = true;
            cluster_used[cd.cluster] = true;
            Track& tr = active[cd.track];
            const double delta = signed_ring_delta(tr.last_centroid, clusters[cd.cluster].centroid, c);
            tr.lifted.push_back(tr.lifted.back() + delta);
            tr.times.push_back(static_cast<double>(t) * opts.dt);
            tr.last_centroid = clusters[cd.cluster].centroid;
            tr.last_t = t;
        }
        std::vector<Track> still;
        for (std::size_t a = 0; a < active.size(); ++a) {
            if (track_used[a]) {
                still.push_back(std::move(active[a]));
            } else {
                finished.push_back(std::move(active[a]));
            }
        }
        for (std::size_t b = 0; b < clusters.size(); ++b) {
            if (cluster_used[b]) continue;
            Track tr;
            tr.first_t = tr.last_t = t;
            tr.last_centroid = clusters[b].centroid;
            tr.times.push_back(static_cast<double>(t) * opts.dt);
            tr.lifted.push_back(clusters[b].centroid);
            still.push_back(std::move(tr));
        }
        active = std::move(still);
    }
    for (auto& tr : active) finished.push_back(std::move(tr));

    if (cluster_count > 0) m.mean_queue_length = cluster_sizes / static_cast<double>(cluster_count);

    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& tr : finished) {
        const double life = static_cast<double>(tr.last_t - tr.first_t) * opts.dt;
        if (life < opts.min_track_s || tr.times.size() < 2) continue;
        ++m.tracks;
        const double n_pts = static_cast<double>(tr.times.size());
        const double tm = std::accumulate(tr.times.begin(), tr.times.end(), 0.0) / n_pts;
        const double ym = std::accumulate(tr.lifted.begin(), tr.lifted.end(), 0.0) / n_pts;
        for (std::size_t k = 0; k < tr.times.size(); ++k) {
            sxy += (tr.times[k] - tm) * (tr.lifted[k] - ym);
            sxx += (tr.times[k] - tm) * (tr.times[k] - tm);
        }
    }
    if (m.tracks > 0 && sxx > 0.0) m.backward_wave_speed = sxy / sxx;

    const double duration = static_cast<double>(T - first) * opts.dt;
    if (duration > 0.0) m.queue_event_frequency = 100.0 * m.tracks / duration;

    const SpeedProfile prof = speed_profile(v.rightCols(T - first));
    m.quasi_period_amplitude = quasi_period_amplitude(prof.v_avg, opts.dt, opts.min_period_s, opts.max_period_s);
    return m;
}

CollectiveSummary collective_summary(const SimOutput& out, double slow_threshold) {
    CollectiveSummary s;
    const double dt = out.config.ring.dt;
    const long T = out.samples();
    const long first = std::min<long>(T, static_cast<long>(std::llround(out.config.burn_in_s / dt)));
    const std::size_t n = out.agents();
    if (n == 0 || first >= T) return s;

    const SpeedProfile prof = speed_profile(out.v.rightCols(T - first));
    s.mean_v_avg = prof.v_avg.mean();
    s.max_v_max = prof.v_max.maxCoeff();
    s.max_v_range = prof.v_range.maxCoeff();
    long slow = 0;
    bool in_episode = false;
    long wide = 0;
    for (long k = 0; k < prof.size(); ++k) {
        const bool is_slow = prof.v_min[k] < 1.0;
        if (is_slow) ++slow;
        if (is_slow && !in_episode) ++s.slow_episodes;
        in_episode = is_slow;
        if (prof.v_range[k] > 2.0) ++wide;
    }
    s.slow_fraction = static_cast<double>(slow) / static_cast<double>(prof.size());
    s.range_over_2_s = static_cast<double>(wide) * dt;

    WaveOptions opts;
    opts.slow_threshold = slow_threshold;
    opts.dt = dt;
    opts.circumference = out.config.ring.circumference;
    opts.first = first;
    s.waves = wave_metrics(out.x, out.v, opts);

    s.mean_gap.assign(n, 0.0);
    std::vector<AgentState> snap(n);
    for (long t = first; t < T; ++t) {
        for (std::size_t i = 0; i < n; ++i) snap[i].x = out.x(static_cast<Eigen::Index>(i), t);
        const std::vector<double> g = bumper_gaps(snap, out.config.ring);
        for (std::size_t i = 0; i < n; ++i) s.mean_gap[i] += g[i];
    }
    for (double& g : s.mean_gap) g /= static_cast<double>(T - first);
    return s;
}

std::vector<int> cut_tree(const std::vector<MergeStep>& tree, int n, int k) {
    require(n >= 1, "cut_tree needs at least one item");
    k = std::clamp(k, 1, n);
    std::vector<int> parent(static_cast<std::size_t>(2 * n), -1);
    const int merges = n - k;
    for (int m = 0; m < merges && m < static_cast<int>(tree.size()); ++m) {
        parent[static_cast<std::size_t>(tree[static_cast<std::size_t>(m)].left)] = n + m;
        parent[static_cast<std::size_t>(tree[static_cast<std::size_t>(m)].right)] = n + m;
    }
    std::vector<int> root(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int r = i;
        while (parent[static_cast<std::size_t>(r)] >= 0) r = parent[static_cast<std::size_t>(r)];
        root[static_cast<std::size_t>(i)] = r;
    }
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::vector<int> seen;
    for (int i = 0; i < n; ++i) {
        const int r = root[static_cast<std::size_t>(i)];
        auto it = std::find(seen.begin(), seen.end(), r);
        if (it == seen.end()) {
            seen.push_back(r);
            labels[static_cast<std::size_t>(i)] = static_cast<int>(seen.size()) - 1;
        } else {
            labels[static_cast<std::size_t>(i)] = static_cast<int>(it - seen.begin());
        }
    }
    return labels;
}

int largest_gap_clusters(const std::vector<MergeStep>& tree, int n) {
    if (n <= 1 || tree.empty()) return std::max(n, 1);
    const double top = tree.back().height;
    double best_gap = 0.0;
    int best_m = static_cast<int>(tree.size());   // apply every merge -> one cluster
    double prev = 0.0;
    for (std::size_t m = 0; m < tree.size(); ++m) {
        const double gap = tree[m].height - prev;
        // gap before merge m: stopping here leaves n - m clusters
        if (m > 0 && gap > best_gap) {
            best_gap = gap;
            best_m = static_cast<int>(m);
        }
        prev = tree[m].height;
    }
    if (best_gap <= 1e-12 * std::max(1.0, top)) return 1;
    return n - best_m;
}

ClusterResult cluster_features(const Matrix& raw, int k) {
    const auto n = static_cast<int>(raw.rows());
    require(n >= 2, "clustering needs at least two vehicles");
    ClusterResult res;
    res.features = raw;
    for (Eigen::Index j = 0; j < raw.cols(); ++j) {
        const double mean = raw.col(j).mean();
        const double sd = std::sqrt((raw.col(j).array() - mean).square().sum() / static_cast<double>(n));
        if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            res.features.col(j).setZero();
            res.warnings.push_back("feature " + std::to_string(j) + " has zero variance; standardised to 0");
        } else {
            res.features.col(j) = (raw.col(j).array() - mean) / sd;
        }
    }

    // Lance-Williams Ward update on squared Euclidean distances
    const auto un = static_cast<std::size_t>(n);
    Matrix d2(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d2(i, j) = (res.features.row(i) - res.features.row(j)).squaredNorm();
    std::vector<int> id(un), size(un, 1);
    std::vector<bool> alive(un, true);
    std::iota(id.begin(), id.end(), 0);
    for (int m = 0; m < n - 1; ++m) {
        int bi = -1, bj = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            if (!alive[static_cast<std::size_t>(i)]) continue;
            for (int j = i + 1; j < n; ++j) {
                if (!alive[static_cast<std::size_t>(j)]) continue;
                if (d2(i, j) < best) {
                    best = d2(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        const auto ui = static_cast<std::size_t>(bi), uj = static_cast<std::size_t>(bj);
        const double ni = size[ui], nj = size[uj];
        for (int q = 0; q < n; ++q) {
            const auto uq = static_cast<std::size_t>(q);
            if (!alive[uq] || q == bi || q == bj) continue;
            const double nq = size[uq];
            const double upd = ((ni + nq) * d2(bi, q) + (nj + nq) * d2(bj, q) - nq * d2(bi, bj)) / (ni + nj + nq);
            d2(bi, q) = d2(q, bi) = upd;
        }
        MergeStep st;
        st.left = std::min(id[ui], id[uj]);
        st.right = std::max(id[ui], id[uj]);
        st.height = std::sqrt(std::max(best, 0.0));
        st.size = size[ui] + size[uj];
        res.tree.push_back(st);
        size[ui] += size[uj];
        id[ui] = n + m;
        alive[uj] = false;
    }

    res.k = std::clamp(k, 1, n);
    res.labels = cut_tree(res.tree, n, res.k);
    res.gap_k = largest_gap_clusters(res.tree, n);
    res.gap_labels = cut_tree(res.tree, n, res.gap_k);

    const int used = *std::max_element(res.labels.begin(), res.labels.end()) + 1;
    res.cluster_means = Matrix::Zero(used, raw.cols());
    Vector counts = Vector::Zero(used);
    for (int i = 0; i < n; ++i) {
        res.cluster_means.row(res.labels[static_cast<std::size_t>(i)]) += raw.row(i);
        counts[res.labels[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (int c = 0; c < used; ++c) res.cluster_means.row(c) /= counts[c];
    return res;
}

ClusterResult cluster_drivers(const std::vector<CalibrationResult>& results, int k) {
    Matrix raw(static_cast<Eigen::Index>(results.size()), 3);
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& p = results[i].theta_hat;
        raw.row(static_cast<Eigen::Index>(i)) << p.noise.sigma_a, p.utility.v_star, p.utility.kappa_v;
    }
    return cluster_features(raw, k);
}

std::vector<FundamentalDiagramPoint> fundamental_diagram(const std::vector<SimOutput>& runs) {
    std::vector<FundamentalDiagramPoint> pts;
    for (const auto& run : runs) {
        FundamentalDiagramPoint p;
        p.vehicles = run.agents();
        const double c = run.config.ring.circumference;
        p.density = static_cast<double>(p.vehicles) / (c / 1000.0);
        const long T = run.samples();
        const long first = std::min<long>(T - 1, static_cast<long>(std::llround(run.config.burn_in_s / run.config.ring.dt)));
        if (p.vehicles > 0 && T > 0) {
            const Matrix tail = run.v.rightCols(T - std::max<long>(first, 0));
            p.mean_speed = tail.mean();
            p.max_v_range = speed_profile(tail).v_range.maxCoeff();
        }
        p.flow = p.density * p.mean_speed * 3.6;
        pts.push_back(p);
    }
    std::stable_sort(pts.begin(), pts.end(),
                     [](const FundamentalDiagramPoint& a, const FundamentalDiagramPoint& b) { return a.density < b.density; });
    return pts;
}

std::vector<RecoveryRow> recovery_report(const DriverParams& truth, const std::vector<CalibrationResult>& estimates) {
    std::vector<RecoveryRow> rows;
    const Eigen::Vector4d t = truth.free_vector();
    const double n = static_cast<double>(estimates.size());
    for (int j = 0; j < 4; ++j) {
        RecoveryRow r;
        r.name = std::string(kFreeParamNames[static_cast<std::size_t>(j)]);
        r.truth = t[j];
        if (!estimates.empty()) {
            std::vector<double> err;
            for (const auto& e : estimates) err.push_back(e.theta_hat.free_vector()[j] - t[j]);
            r.mean_error = std::accumulate(err.begin(), err.end(), 0.0) / n;
            double ss = 0.0;
            double abs_sum = 0.0;
            for (double e : err) {
                ss += (e - r.mean_error) * (e - r.mean_error);
                abs_sum += std::abs(e);
            }
            r.sd_error = estimates.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            r.mean_abs_error = abs_sum / n;
            r.biased = std::abs(r.mean_error) > r.sd_error;
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace ringcal
