#include "ringcal/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace ringcal {

void Box::validate(Eigen::Index dim) const {
    require(lower.size() == dim && upper.size() == dim, "bounds do not match the parameter dimension");
    require((lower.array() < upper.array()).all(), "every lower bound must be below its upper bound");
    require(lower.allFinite() && upper.allFinite(), "bounds must be finite");
}

namespace {

double safe_eval(const Objective& f, const Vector& x, int& evals) {
    ++evals;
    try {
        const double v = f(x);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const NumericError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

LocalResult nelder_mead(const Objective& f, const Vector& start, const Box& box, const SimplexConfig& cfg) {
    const Eigen::Index n = start.size();
    box.validate(n);
    LocalResult res;
    const Vector range = box.range();

    std::vector<Vector> pts;
    std::vector<double> vals;
    pts.reserve(static_cast<std::size_t>(n + 1));
    pts.push_back(box.clamp(start));
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector p = pts[0];
        const double step = cfg.initial_step * range[i];
        p[i] = (p[i] + step <= box.upper[i]) ? p[i] + step : p[i] - step;
        pts.push_back(p);
    }
    for (const auto& p : pts) vals.push_back(safe_eval(f, p, res.evals));

    std::vector<std::size_t> idx(static_cast<std::size_t>(n + 1));
    auto order = [&] {
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        // best (largest) first; stable so equal values keep insertion order
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    };

    while (true) {
        order();
        const double best = vals[idx.front()];
        const double worst = vals[idx.back()];
        double diameter = 0.0;
        for (std::size_t k = 1; k < idx.size(); ++k) {
            diameter = std::max(diameter,
                                ((pts[idx[k]] - pts[idx[0]]).array() / range.array()).abs().maxCoeff());
        }
        if (std::isfinite(best) && std::isfinite(worst) &&
            best - worst <= cfg.rel_tol * std::max(1.0, std::abs(best))) {
            res.tolerance_reached = true;
            break;
        }
        if (diameter < 1e-12) {
            res.tolerance_reached = true;
            break;
        }
        if (res.evals >= cfg.max_evals) break;

        Vector centroid = Vector::Zero(n);
        for (std::size_t k = 0; k + 1 < idx.size(); ++k) centroid += pts[idx[k]];
        centroid /= static_cast<double>(n);

        const std::size_t w = idx.back();
        const Vector xr = box.clamp(centroid + (centroid - pts[w]));
        const double fr = safe_eval(f, xr, res.evals);
        const double second_worst = vals[idx[idx.size() - 2]];

        if (fr > best) {
            const Vector xe = box.clamp(centroid + 2.0 * (centroid - pts[w]));
            const double fe = safe_eval(f, xe, res.evals);
            if (fe > fr) {
                pts[w] = xe;
                vals[w] = fe;
            } else {
                pts[w] = xr;
                vals[w] = fr;
            }
            continue;
        }
        if (fr > second_worst) {
            pts[w] = xr;
            vals[w] = fr;
            continue;
        }
        // contraction: outside if the reflection beat the worst point, inside otherwise
        const bool outside = fr > vals[w];
        const Vector xc = outside ? Vector(box.clamp(centroid + 0.5 * (xr - centroid)))
                                  : Vector(box.clamp(centroid + 0.5 * (pts[w] - centroid)));
        const double fc = safe_eval(f, xc, res.evals);
        if (fc > (outside ? fr : vals[w])) {
            pts[w] = xc;
            vals[w] = fc;
            continue;
        }
        const Vector& xb = pts[idx.front()];
        for (std::size_t k = 1; k < idx.size(); ++k) {
            const std::size_t j = idx[k];
            pts[j] = box.clamp(xb + 0.5 * (pts[j] - xb));
            vals[j] = safe_eval(f, pts[j], res.evals);
        }
    }

    order();
    res.x = pts[idx.front()];
    res.value = vals[idx.front()];
    return res;
}

BasinHopResult basin_hopping(const Objective& f, const Vector& start, const Box& box, const BasinHopConfig& cfg,
                             std::uint64_t seed) {
    box.validate(start.size());
    require(cfg.hops >= 0, "hop count must be non-negative");
    require(cfg.temperature > 0.0, "temperature must be positive");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    BasinHopResult out;

    int start_evals = 0;
    const double start_value = safe_eval(f, box.clamp(start), start_evals);
    LocalResult current = nelder_mead(f, start, box, cfg.local);
    out.evals = start_evals + current.evals;
    out.improved = current.value > start_value;
    out.best_x = current.x;
    out.best_value = current.value;
    out.best_history.push_back(out.best_value);

    const Vector half_width = cfg.step_fraction * box.range();
    for (int hop = 0; hop < cfg.hops; ++hop) {
        Vector trial = current.x;
        for (Eigen::Index i = 0; i < trial.size(); ++i) trial[i] += half_width[i] * unit(rng);
        trial = box.clamp(trial);

        int trial_start_evals = 0;
        const double trial_start = safe_eval(f, trial, trial_start_evals);
        LocalResult local = nelder_mead(f, trial, box, cfg.local);
        out.evals += trial_start_evals + local.evals;
        if (local.value > trial_start) out.improved = true;

        // draw the acceptance variate on every hop so the stream does not
        // depend on which branch was taken
        const double u = 0.5 * (unit(rng) + 1.0);
        bool accept = local.value >= current.value;
        if (!accept && std::isfinite(local.value)) {
            accept = u < std::exp((local.value - current.value) / cfg.temperature);
        }
        if (accept) current = local;
        if (local.value > out.best_value) {
            out.best_value = local.value;
            out.best_x = local.x;
        }
        ++out.hops;
        out.best_history.push_back(out.best_value);
    }
    return out;
}

Matrix finite_difference_hessian(const Objective& f, const Vector& x, const Vector& steps) {
    const Eigen::Index n = x.size();
    require(steps.size() == n, "one step per coordinate is required");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(steps[i] > 0.0) || !std::isfinite(x[i] + steps[i]) || x[i] + steps[i] == x[i]) {
            throw NumericError("finite-difference step underflows for coordinate " + std::to_string(i), i);
        }
    }
    auto eval = [&](const Vector& p, Eigen::Index i, Eigen::Index j) {
        const double v = f(p);
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "nonfinite objective in Hessian entry (" << i << ", " << j << ")";
            throw NumericError(msg.str(), i * n + j);
        }
        return v;
    };

    Matrix H(n, n);
    const double f0 = eval(x, 0, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector p = x;
        p[i] = x[i] + steps[i];
        const double fp = eval(p, i, i);
        p[i] = x[i] - steps[i];
        const double fm = eval(p, i, i);
        H(i, i) = (fp - 2.0 * f0 + fm) / (steps[i] * steps[i]);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            Vector q = x;
            q[i] = x[i] + steps[i];
            q[j] = x[j] + steps[j];
            const double fpp = eval(q, i, j);
            q[j] = x[j] - steps[j];
            const double fpm = eval(q, i, j);
            q[i] = x[i] - steps[i];
            const double fmm = eval(q, i, j);
            q[j] = x[j] + steps[j];
            const double fmp = eval(q, i, j);
            H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j]);
        }
    }
    return 0.5 * (H + H.transpose());
}

Vector sorted_eigenvalues(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("eigen-decomposition failed");
    Vector ev = solver.eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    return ev;
}

}  // namespace ringcal
