#include "tfrg/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "tfrg/util.hpp"
#include "tfrg/walk.hpp"

namespace tfrg {

namespace {

// O(1) membership for a small set near the origin: bitmap over its bounding box.
class PointSetLookup {
public:
    PointSetLookup(const std::vector<ZdPoint>& pts, int d) : d_(d) {
        std::int64_t r = 0;
        for (const auto& p : pts)
            for (int i = 0; i < d; ++i) r = std::max<std::int64_t>(r, std::llabs(p[i]));
        box_ = ZdBox::make(d, std::max<std::int64_t>(r, 1));
        bits_ = DenseBitset(box_.total);
        for (const auto& p : pts) bits_.set(box_.index(p));
    }

    bool contains(const std::int64_t* c) const {
        for (int i = 0; i < d_; ++i)
            if (c[i] < -box_.R || c[i] > box_.R) return false;
        return bits_.get(box_.index(c));
    }
    bool contains(const ZdPoint& p) const { return contains(p.data()); }

    std::int64_t radius() const { return box_.R; }

private:
    int d_;
    ZdBox box_;
    DenseBitset bits_;
};

}  // namespace

ZdBox ZdBox::make(int d, std::int64_t R) {
    if (d < 1 || R < 1) throw std::invalid_argument("ZdBox: bad dimensions");
    ZdBox b;
    b.d = d;
    b.R = R;
    b.M = 2 * R + 1;
    std::uint64_t total = 1;
    for (int i = 0; i < d; ++i) {
        if (total > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(b.M))
            throw std::invalid_argument("ZdBox: box too large");
        total *= static_cast<std::uint64_t>(b.M);
    }
    b.total = total;
    b.strides.resize(d);
    std::uint64_t stride = 1;
    for (int i = d - 1; i >= 0; --i) {
        b.strides[i] = stride;
        stride *= static_cast<std::uint64_t>(b.M);
    }
    return b;
}

std::int64_t zd_diameter(const std::vector<ZdPoint>& A) {
    if (A.empty()) return 0;
    int d = static_cast<int>(A[0].size());
    std::int64_t diam = 0;
    for (int i = 0; i < d; ++i) {
        std::int64_t lo = A[0][i], hi = A[0][i];
        for (const auto& p : A) {
            lo = std::min(lo, p[i]);
            hi = std::max(hi, p[i]);
        }
        diam = std::max(diam, hi - lo);
    }
    return diam;
}

std::vector<ZdPoint> inner_boundary_zd(const std::vector<ZdPoint>& A, int d) {
    PointSetLookup in(A, d);
    std::vector<ZdPoint> out;
    for (const auto& p : A) {
        ZdPoint q = p;
        bool boundary = false;
        for (int i = 0; i < d && !boundary; ++i) {
            for (int s = -1; s <= 1 && !boundary; s += 2) {
                q[i] = p[i] + s;
                if (!in.contains(q)) boundary = true;
            }
            q[i] = p[i];
        }
        if (boundary) out.push_back(p);
    }
    return out;
}

namespace {

// Red-black SOR for the lattice Laplace problem with Dirichlet data 1 on A and
// `boundary_value` outside the box. Convergence in O(M) sweeps at the tuned
// relaxation parameter.
struct SorSolver {
    const ZdBox& box;
    std::vector<double>& h;
    const std::vector<std::uint8_t>& fixed;
    double bv;
    double omega;
    unsigned workers;

    double neighbor_sum(std::uint64_t idx, const std::int64_t* c) const {
        double s = 0.0;
        for (int i = 0; i < box.d; ++i) {
            s += (c[i] == box.R) ? bv : h[idx + box.strides[i]];
            s += (c[i] == -box.R) ? bv : h[idx - box.strides[i]];
        }
        return s;
    }

    // one color pass over a contiguous flat range
    void color_pass(std::uint64_t lo, std::uint64_t hi, int color) {
        std::vector<std::int64_t> c(box.d);
        box.coords(lo, c.data());
        int parity = 0;
        for (int i = 0; i < box.d; ++i) parity ^= static_cast<int>((c[i] + box.R) & 1);
        const double inv2d = 1.0 / (2.0 * box.d);
        for (std::uint64_t idx = lo; idx < hi; ++idx) {
            if (parity == color && !fixed[idx]) {
                double avg = neighbor_sum(idx, c.data()) * inv2d;
                h[idx] += omega * (avg - h[idx]);
            }
            // odometer increment
            int i = box.d - 1;
            while (i >= 0 && c[i] == box.R) {
                c[i] = -box.R;
                --i;
            }
            if (i >= 0) ++c[i];
            parity ^= 1;
            if (i != box.d - 1 && i >= 0) {
                // carry changed several coordinates; recompute parity
                parity = 0;
                for (int k = 0; k < box.d; ++k) parity ^= static_cast<int>((c[k] + box.R) & 1);
            }
        }
    }

    void sweep() {
        for (int color = 0; color < 2; ++color) {
            if (workers <= 1) {
                color_pass(0, box.total, color);
            } else {
                // split along axis 0: slabs are independent within a color
                std::uint64_t slab = box.strides[0];
                std::uint64_t nslabs = static_cast<std::uint64_t>(box.M);
                unsigned w = std::min<std::uint64_t>(workers, nslabs);
                std::vector<std::thread> pool;
                for (unsigned t = 0; t < w; ++t) {
                    std::uint64_t s0 = nslabs * t / w, s1 = nslabs * (t + 1) / w;
                    pool.emplace_back([this, s0, s1, slab, color] {
                        color_pass(s0 * slab, s1 * slab, color);
                    });
                }
                for (auto& th : pool) th.join();
            }
        }
    }

    double max_residual() const {
        std::vector<std::int64_t> c(box.d);
        for (int i = 0; i < box.d; ++i) c[i] = -box.R;
        const double inv2d = 1.0 / (2.0 * box.d);
        double worst = 0.0;
        for (std::uint64_t idx = 0; idx < box.total; ++idx) {
            if (!fixed[idx]) {
                double r = std::fabs(neighbor_sum(idx, c.data()) * inv2d - h[idx]);
                worst = std::max(worst, r);
            }
            int i = box.d - 1;
            while (i >= 0 && c[i] == box.R) c[i--] = -box.R;
            if (i >= 0) ++c[i];
        }
        return worst;
    }
};

}  // namespace

HarmonicField harmonic_solve(const std::vector<ZdPoint>& A, int d, std::int64_t R,
                             double boundary_value, double tol, unsigned workers) {
    if (tol <= 0) throw std::invalid_argument("harmonic_solve: tol must be positive");
    if (A.empty()) throw std::invalid_argument("harmonic_solve: empty set");
    for (const auto& p : A) {
        if (static_cast<int>(p.size()) != d) throw std::invalid_argument("harmonic_solve: dim mismatch");
        for (int i = 0; i < d; ++i)
            if (std::llabs(p[i]) > R / 2)
                throw std::invalid_argument("harmonic_solve: A must lie inside B(0, R/2)");
    }
    HarmonicField f;
    f.box = ZdBox::make(d, R);
    f.boundary_value = boundary_value;
    f.values.assign(f.box.total, boundary_value);
    f.fixed.assign(f.box.total, 0);
    for (const auto& p : A) {
        std::uint64_t idx = f.box.index(p);
        f.values[idx] = 1.0;
        f.fixed[idx] = 1;
    }

    double omega = 2.0 / (1.0 + std::sin(M_PI / static_cast<double>(f.box.M + 1)));
    SorSolver solver{f.box, f.values, f.fixed, boundary_value, omega, workers};

    const std::uint64_t sweep_cap = 100 * static_cast<std::uint64_t>(R) * static_cast<std::uint64_t>(R);
    std::uint64_t done = 0;
    double res = std::numeric_limits<double>::infinity();
    while (done < sweep_cap) {
        std::uint64_t burst = std::min<std::uint64_t>(8, sweep_cap - done);
        for (std::uint64_t k = 0; k < burst; ++k) solver.sweep();
        done += burst;
        res = solver.max_residual();
        if (res <= tol) break;
    }
    f.residual = res;
    f.sweeps = done;
    if (res > tol)
        throw std::runtime_error("harmonic_solve: no convergence within sweep cap, residual " +
                                 std::to_string(res));
    return f;
}

std::vector<double> EquilibriumMeasure::normalized() const {
    std::vector<double> out(weights);
    for (double& w : out) w /= capacity;
    return out;
}

namespace {

// q_R(x) = P_x[T_{B(0,R)} < H-tilde_A] for x on the inner boundary of A.
std::vector<double> escape_probs(const std::vector<ZdPoint>& A,
                                 const std::vector<ZdPoint>& boundary, int d,
                                 const HarmonicField& h) {
    PointSetLookup in(A, d);
    std::vector<double> q(boundary.size());
    for (std::size_t k = 0; k < boundary.size(); ++k) {
        ZdPoint y = boundary[k];
        double hit = 0.0;
        for (int i = 0; i < d; ++i) {
            for (int s = -1; s <= 1; s += 2) {
                y[i] = boundary[k][i] + s;
                hit += in.contains(y) ? 1.0 : h.at(y);
            }
            y[i] = boundary[k][i];
        }
        q[k] = 1.0 - hit / (2.0 * d);
    }
    return q;
}

}  // namespace

EquilibriumMeasure equilibrium(const std::vector<ZdPoint>& A, int d,
                               std::int64_t R1, std::int64_t R2, double tol, unsigned workers) {
    if (A.empty()) throw std::invalid_argument("equilibrium: empty set");
    std::int64_t diam = zd_diameter(A);
    if (R1 <= 0) R1 = std::max<std::int64_t>(32, 8 * std::max<std::int64_t>(diam, 1));
    if (R2 <= 0) R2 = 2 * R1;
    if (R1 >= R2) throw std::invalid_argument("equilibrium: need R1 < R2");

    HarmonicField h1 = harmonic_solve(A, d, R1, 0.0, tol, workers);
    HarmonicField h2 = harmonic_solve(A, d, R2, 0.0, tol, workers);

    EquilibriumMeasure em;
    em.set = A;
    em.boundary = inner_boundary_zd(A, d);
    em.method = "exact-extrapolated";
    std::vector<double> q1 = escape_probs(A, em.boundary, d, h1);
    std::vector<double> q2 = escape_probs(A, em.boundary, d, h2);

    // escape probabilities decrease towards the R -> infinity limit
    const double g1 = std::pow(static_cast<double>(R1), 2.0 - d);
    const double g2 = std::pow(static_cast<double>(R2), 2.0 - d);
    em.weights.resize(em.boundary.size());
    for (std::size_t k = 0; k < em.boundary.size(); ++k) {
        if (q2[k] > q1[k] + 1e-9)
            throw std::runtime_error(
                "equilibrium: extrapolation unstable, q(R2)=" + std::to_string(q2[k]) +
                " exceeds q(R1)=" + std::to_string(q1[k]));
        double e = (q2[k] * g1 - q1[k] * g2) / (g1 - g2);
        em.weights[k] = std::max(e, 0.0);
        em.error += std::fabs(q2[k] - e);
        em.capacity += em.weights[k];
    }
    return em;
}

CapacityMc capacity_mc(const std::vector<ZdPoint>& A, int d, std::int64_t R_kill,
                       std::uint64_t n, std::uint64_t seed, unsigned workers) {
    if (n == 0) throw std::invalid_argument("capacity_mc: n must be >= 1");
    std::int64_t diam = zd_diameter(A);
    for (const auto& p : A)
        for (int i = 0; i < d; ++i)
            if (std::llabs(p[i]) > R_kill / 4)
                throw std::invalid_argument("capacity_mc: A must lie inside B(0, R_kill/4)");
    (void)diam;

    PointSetLookup in(A, d);
    CapacityMc out;
    out.boundary = inner_boundary_zd(A, d);
    out.freqs.assign(out.boundary.size(), 0.0);

    parallel_replicas(out.boundary.size(), workers, [&](std::size_t k) {
        Rng rng = Rng::stream(seed, k);
        const ZdPoint& x0 = out.boundary[k];
        std::vector<std::int64_t> c(d);
        std::uint64_t escapes = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            std::copy(x0.begin(), x0.end(), c.begin());
            for (;;) {
                int dir = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(d)));
                int axis = dir >> 1;
                c[axis] += (dir & 1) ? -1 : 1;
                std::int64_t a = std::llabs(c[axis]);
                if (a >= R_kill) {
                    ++escapes;
                    break;
                }
                if (in.contains(c.data())) break;
            }
        }
        out.freqs[k] = static_cast<double>(escapes) / static_cast<double>(n);
    });

    double var = 0.0;
    for (double p : out.freqs) {
        out.cap_hat += p;
        var += p * (1.0 - p) / static_cast<double>(n);
    }
    out.stderr_ = std::sqrt(var);
    return out;
}

MeanHitting mean_hitting(const TorusGeom& geom, const SiteSet& V, std::uint64_t n,
                         std::uint64_t seed, unsigned workers) {
    if (V.empty()) throw std::invalid_argument("mean_hitting: empty target");
    MeanHitting out;
    if (V.size() == geom.total) {
        out.h_bar = 0.0;
        out.ratio_defined = false;
        return out;
    }
    // capacity of the Z^d image (chart around the first site of V)
    Site center = V.sites.front();
    std::vector<ZdPoint> img;
    img.reserve(V.size());
    for (Site s : V.sites) img.push_back(chart(center, s, geom));
    EquilibriumMeasure em = equilibrium(img, geom.d, 0, 0, 1e-10, workers);
    out.capacity = em.capacity;

    DenseBitset target = V.as_bitset(geom);
    std::vector<double> hits(n, 0.0);
    parallel_replicas(n, workers, [&](std::size_t i) {
        std::uint64_t si = Rng::stream(seed, i).next_u64();
        auto t = hitting_time(geom, target, si, std::uint64_t{1} << 44);
        if (!t) throw std::runtime_error("mean_hitting: step cap exceeded");
        hits[i] = static_cast<double>(*t);
    });
    double mean = 0.0;
    for (double h : hits) mean += h;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double h : hits) var += (h - mean) * (h - mean);
    var /= static_cast<double>(n) * std::max<double>(1.0, static_cast<double>(n - 1));
    out.h_bar = mean;
    out.stderr_ = std::sqrt(var);
    if (mean > 0 && out.capacity > 0) {
        out.gloc_ratio = static_cast<double>(geom.total) / (mean * out.capacity);
    } else {
        out.ratio_defined = false;
    }
    return out;
}

}  // namespace tfrg
