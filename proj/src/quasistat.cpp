#include "tfrg/quasistat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tfrg/rng.hpp"

namespace tfrg {

namespace {

// slab-parallel loop over all sites: fn(site, coords) with odometer coords;
// small lattices run single-threaded (thread churn dwarfs the matvec there)
template <typename F>
void for_each_site(const TorusGeom& geom, unsigned workers, F&& fn) {
    if (geom.total < (std::uint64_t{1} << 16)) workers = 1;
    parallel_replicas(static_cast<std::size_t>(geom.N), workers,
                      [&](std::size_t a) {
                          std::vector<std::int64_t> c(geom.d, 0);
                          c[0] = static_cast<std::int64_t>(a);
                          Site s = a * geom.strides[0];
                          for (std::uint64_t i = 0; i < geom.strides[0]; ++i, ++s) {
                              fn(s, c.data());
                              int j = geom.d - 1;
                              while (j >= 1 && c[j] == geom.N - 1) c[j--] = 0;
                              if (j >= 1) ++c[j];
                          }
                      });
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double sum_of(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += v;
    return s;
}

double l1(const std::vector<double>& a) {
    double s = 0.0;
    for (double v : a) s += std::fabs(v);
    return s;
}

void check_complement_connected(const TorusGeom& geom, const DenseBitset& B) {
    std::uint64_t comp_size = geom.total - B.popcount();
    if (comp_size == 0)
        throw std::invalid_argument("quasistationary: B covers the whole torus");
    Site start = 0;
    while (B.get(start)) ++start;
    DenseBitset seen(geom.total);
    seen.set(start);
    std::vector<Site> queue{start};
    std::uint64_t reached = 1;
    std::vector<std::int64_t> c(geom.d);
    std::size_t head = 0;
    while (head < queue.size()) {
        Site s = queue[head++];
        geom.coords_of(s, c.data());
        for (int dir = 0; dir < 2 * geom.d; ++dir) {
            Site n = neighbor_site(s, dir, geom, c.data(), nullptr);
            if (!B.get(n) && !seen.get(n)) {
                seen.set(n);
                queue.push_back(n);
                ++reached;
            }
        }
    }
    if (reached != comp_size)
        throw std::invalid_argument("quasistationary: complement of B is disconnected");
}

}  // namespace

void RestrictedOperator::apply(const std::vector<double>& x, std::vector<double>& y,
                               unsigned workers) const {
    const TorusGeom& g = *geom;
    if (x.size() != g.total) throw std::invalid_argument("RestrictedOperator: size mismatch");
    y.assign(g.total, 0.0);
    const double inv = 1.0 / (2.0 * g.d);
    for_each_site(g, workers, [&](Site s, const std::int64_t* c) {
        if (excluded.get(s)) return;
        double acc = 0.0;
        for (int dir = 0; dir < 2 * g.d; ++dir) {
            Site n = neighbor_site(s, dir, g, c, nullptr);
            if (!excluded.get(n)) acc += x[n];
        }
        y[s] = acc * inv;
    });
}

QuasiDist quasistationary(const TorusGeom& geom, const SiteSet& B, double tol,
                          std::uint64_t max_iter, unsigned workers) {
    if (tol <= 0.0) throw std::invalid_argument("quasistationary: tol must be positive");
    if (max_iter == 0) max_iter = 500000;
    RestrictedOperator op(geom, B);
    check_complement_connected(geom, op.excluded);

    const std::uint64_t comp = geom.total - op.excluded.popcount();
    std::vector<double> v(geom.total, 0.0), w(geom.total, 0.0);
    const double init = 1.0 / std::sqrt(static_cast<double>(comp));
    for (Site s = 0; s < geom.total; ++s)
        if (!op.excluded.get(s)) v[s] = init;

    // iterate with the lazy operator (I + P^B)/2: the graph may be bipartite
    // (even N), where P^B has the eigenvalue pair +-lambda1 and the plain
    // power iteration oscillates; the lazy spectrum is nonnegative with the
    // same eigenvectors and eigenvalue order
    QuasiDist out;
    double lambda = 0.0;
    for (std::uint64_t it = 1;; ++it) {
        op.apply(v, w, workers);
        for (Site s = 0; s < geom.total; ++s) w[s] = 0.5 * (v[s] + w[s]);
        lambda = 2.0 * dot(v, w) - 1.0;  // Rayleigh quotient of P^B, unit v
        double res = 0.0;
        for (Site s = 0; s < geom.total; ++s)
            res = std::max(res, std::fabs(2.0 * w[s] - v[s] - lambda * v[s]));
        out.iterations = it;
        double nw = norm2(w);
        if (nw == 0.0) throw std::runtime_error("quasistationary: operator annihilated iterate");
        for (double& e : w) e /= nw;
        v.swap(w);
        if (res <= tol) {
            out.residual = res;
            break;
        }
        if (it >= max_iter)
            throw std::runtime_error("quasistationary: power iteration did not converge, residual " +
                                     std::to_string(res));
    }
    out.lambda1 = lambda;

    // sigma: iterates stay nonnegative from the uniform start
    out.sigma = v;
    double mass = sum_of(out.sigma);
    for (double& e : out.sigma) e = std::max(e, 0.0) / mass;

    // lambda2 by deflation against v1
    Rng rng = Rng::stream(0x5eed0002u, 0);
    std::vector<double> u(geom.total, 0.0);
    for (Site s = 0; s < geom.total; ++s)
        if (!op.excluded.get(s)) u[s] = rng.uniform() - 0.5;
    double c1 = dot(u, v);
    for (Site s = 0; s < geom.total; ++s) u[s] -= c1 * v[s];
    double nu = norm2(u);
    for (double& e : u) e /= nu;
    double lambda2 = 0.0;
    // the deflated residual has a floor set by the splitting of the
    // near-degenerate cluster below lambda2; stop on stagnation (no further
    // improvement over a window), not only on the absolute threshold
    double checkpoint_res = std::numeric_limits<double>::infinity();
    for (std::uint64_t it = 1; it <= max_iter; ++it) {
        op.apply(u, w, workers);
        for (Site s = 0; s < geom.total; ++s) w[s] = 0.5 * (u[s] + w[s]);
        c1 = dot(w, v);
        for (Site s = 0; s < geom.total; ++s) w[s] -= c1 * v[s];
        lambda2 = 2.0 * dot(u, w) - 1.0;
        double res = 0.0;
        for (Site s = 0; s < geom.total; ++s)
            res = std::max(res, std::fabs(2.0 * w[s] - u[s] - lambda2 * u[s]));
        nu = norm2(w);
        if (nu == 0.0) break;  // no second eigencomponent (1-dimensional complement)
        for (double& e : w) e /= nu;
        u.swap(w);
        if (res <= std::max(tol, 1e-12)) break;
        if (it % 500 == 0) {
            if (res > 0.995 * checkpoint_res) break;
            checkpoint_res = res;
        }
    }
    out.lambda2 = lambda2;
    return out;
}

GapReport gap_check(const TorusGeom& geom, const SiteSet& B, double tol, unsigned workers) {
    QuasiDist q = quasistationary(geom, B, tol, 0, workers);
    GapReport r;
    r.lambda1 = q.lambda1;
    r.lambda2 = q.lambda2;
    r.gap = q.lambda1 - q.lambda2;
    r.gap_scaled = r.gap * static_cast<double>(geom.N) * static_cast<double>(geom.N);
    return r;
}

namespace {

// shifted log-scale accumulation of sum_k exp(lw_k) * m_k * v_k where the
// terms come from the lazy uniformization e^{-t(I-P)} = e^{-2t(I-Q)},
// Q = (I+P)/2, whose spectrum is nonnegative (no alternating-sign terms).
struct LogScaleAccumulator {
    std::vector<double> acc;
    double scale = 0.0;
    bool started = false;

    void add(const std::vector<double>& v, double log_coeff) {
        if (!started) {
            acc = v;
            scale = log_coeff;
            started = true;
            return;
        }
        if (log_coeff > scale) {
            double f = std::exp(scale - log_coeff);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = acc[i] * f + v[i];
            scale = log_coeff;
        } else {
            double f = std::exp(log_coeff - scale);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += f * v[i];
        }
    }
};

}  // namespace

std::vector<double> conditional_distribution(const TorusGeom& geom, const SiteSet& B, Site x,
                                             double t, unsigned workers) {
    if (t < 0.0) throw std::invalid_argument("conditional_distribution: t must be >= 0");
    RestrictedOperator op(geom, B);
    if (op.excluded.get(x))
        throw std::invalid_argument("conditional_distribution: start lies in B");

    std::vector<double> v(geom.total, 0.0);
    v[x] = 1.0;
    if (t == 0.0) return v;

    const double rate = 2.0 * t;  // lazy kernel runs at twice the jump rate
    std::vector<double> pv(geom.total, 0.0);
    LogScaleAccumulator sum;
    double log_mass = 0.0;
    double lgk = 0.0;  // log k!
    const std::uint64_t kmax =
        static_cast<std::uint64_t>(rate + 12.0 * std::sqrt(rate + 1.0) + 40.0);
    for (std::uint64_t k = 0; k <= kmax; ++k) {
        if (k > 0) {
            lgk += std::log(static_cast<double>(k));
            op.apply(v, pv, workers);
            for (Site s = 0; s < geom.total; ++s) v[s] = 0.5 * (v[s] + pv[s]);
            double m = sum_of(v);
            if (m <= 0.0) break;  // all mass absorbed
            for (double& e : v) e /= m;
            log_mass += std::log(m);
        }
        double lw = -rate + static_cast<double>(k) * std::log(rate) - lgk + log_mass;
        sum.add(v, lw);
        if (static_cast<double>(k) > rate) {
            double acc_mass = sum_of(sum.acc);
            if (acc_mass > 0.0 && lw < sum.scale + std::log(acc_mass) - 46.0) break;
        }
    }

    double total = sum.started ? sum_of(sum.acc) : 0.0;
    if (!(total > 0.0))
        throw std::runtime_error("conditional_distribution: surviving mass lost to underflow");
    for (double& e : sum.acc) e /= total;
    return sum.acc;
}

MixingTv mixing_tv(const TorusGeom& geom, double t, unsigned workers) {
    if (t < 0.0) throw std::invalid_argument("mixing_tv: t must be >= 0");
    SiteSet empty;
    RestrictedOperator op(geom, empty);

    const double uni = 1.0 / static_cast<double>(geom.total);
    std::vector<double> v(geom.total, -uni);
    v[0] += 1.0;
    MixingTv out;
    if (t == 0.0) {
        out.tv = 1.0 - uni;
        out.log_tv = std::log(out.tv);
        return out;
    }

    double m0 = l1(v);
    for (double& e : v) e /= m0;
    double log_mass = std::log(m0);

    const double rate = 2.0 * t;
    std::vector<double> pv(geom.total, 0.0);
    LogScaleAccumulator sum;
    double lgk = 0.0;
    const std::uint64_t kmax =
        static_cast<std::uint64_t>(rate + 12.0 * std::sqrt(rate + 1.0) + 40.0);
    for (std::uint64_t k = 0; k <= kmax; ++k) {
        if (k > 0) {
            lgk += std::log(static_cast<double>(k));
            op.apply(v, pv, workers);
            for (Site s = 0; s < geom.total; ++s) v[s] = 0.5 * (v[s] + pv[s]);
            // re-project onto mean zero to stop numerical drift toward uniform
            double mean = sum_of(v) * uni;
            for (double& e : v) e -= mean;
            double m = l1(v);
            if (m <= 0.0) break;
            for (double& e : v) e /= m;
            log_mass += std::log(m);
        }
        double lw = -rate + static_cast<double>(k) * std::log(rate) - lgk + log_mass;
        sum.add(v, lw);
        if (static_cast<double>(k) > rate) {
            double acc_mass = l1(sum.acc);
            if (acc_mass > 0.0 && lw < sum.scale + std::log(acc_mass) - 46.0) break;
        }
    }

    double mass = sum.started ? l1(sum.acc) : 0.0;
    if (!(mass > 0.0)) {
        out.log_tv = -std::numeric_limits<double>::infinity();
        out.tv = 0.0;
        return out;
    }
    out.log_tv = std::log(0.5 * mass) + sum.scale;
    out.tv = std::exp(out.log_tv);
    return out;
}

}  // namespace tfrg
