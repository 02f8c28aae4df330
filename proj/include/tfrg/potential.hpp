#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfrg/lattice.hpp"
#include "tfrg/rng.hpp"

namespace tfrg {

// Flat-indexed box B(0,R) in Z^d, side M = 2R+1, coordinates in [-R, R].
struct ZdBox {
    int d = 0;
    std::int64_t R = 0;
    std::int64_t M = 0;
    std::uint64_t total = 0;
    std::vector<std::uint64_t> strides;

    static ZdBox make(int d, std::int64_t R);

    std::uint64_t index(const std::int64_t* coords) const {
        std::uint64_t s = 0;
        for (int i = 0; i < d; ++i) s += static_cast<std::uint64_t>(coords[i] + R) * strides[i];
        return s;
    }
    std::uint64_t index(const ZdPoint& p) const { return index(p.data()); }
    void coords(std::uint64_t idx, std::int64_t* out) const {
        for (int i = 0; i < d; ++i) {
            out[i] = static_cast<std::int64_t>(idx / strides[i]) - R;
            idx %= strides[i];
        }
    }
    bool inside(const ZdPoint& p) const {
        for (int i = 0; i < d; ++i)
            if (p[i] < -R || p[i] > R) return false;
        return true;
    }
};

// Discrete harmonic function h(y) ~ P_y[H_A < T_{B(0,R)}] on the box.
struct HarmonicField {
    ZdBox box;
    double boundary_value = 0.0;
    std::vector<double> values;       // h per box cell; 1 on A, boundary_value is implicit outside
    std::vector<std::uint8_t> fixed;  // 1 where the value is Dirichlet data (the set A)
    double residual = 0.0;
    std::uint64_t sweeps = 0;

    double at(const ZdPoint& p) const { return values[box.index(p)]; }
};

HarmonicField harmonic_solve(const std::vector<ZdPoint>& A, int d, std::int64_t R,
                             double boundary_value = 0.0, double tol = 1e-10,
                             unsigned workers = 1);

struct EquilibriumMeasure {
    std::vector<ZdPoint> set;       // A
    std::vector<ZdPoint> boundary;  // inner boundary of A
    std::vector<double> weights;    // e_A(x), same order as boundary
    double capacity = 0.0;
    std::string method;             // "exact-extrapolated" or "monte-carlo"
    double error = 0.0;             // |value(R2) - extrapolated| (exact) or stderr (MC)

    std::vector<double> normalized() const;  // weights / capacity
};

// Richardson-extrapolated equilibrium measure: escape probabilities towards
// the killing sphere at R1 and R2, extrapolated in R^{2-d} to R -> infinity.
// R1 = 0 picks the default max(32, 8 * diam(A)); R2 = 0 picks 2 * R1.
EquilibriumMeasure equilibrium(const std::vector<ZdPoint>& A, int d,
                               std::int64_t R1 = 0, std::int64_t R2 = 0,
                               double tol = 1e-10, unsigned workers = 1);

struct CapacityMc {
    double cap_hat = 0.0;
    double stderr_ = 0.0;
    std::vector<double> freqs;  // escape frequency per boundary point
    std::vector<ZdPoint> boundary;
};

// Monte Carlo capacity: escape-to-R_kill frequency per inner boundary point.
// Upward bias of order (diam A / R_kill)^(d-2).
CapacityMc capacity_mc(const std::vector<ZdPoint>& A, int d, std::int64_t R_kill,
                       std::uint64_t n, std::uint64_t seed, unsigned workers = 1);

struct MeanHitting {
    double h_bar = 0.0;
    double stderr_ = 0.0;
    double capacity = 0.0;
    double gloc_ratio = 0.0;  // N^d / (H_bar * cap(V))
    bool ratio_defined = true;
};

// Mean entrance time of V from a uniform start vs the capacity of its Z^d
// image (finite-volume check of the N^d / (E[H_V] cap(V)) -> 1 relation).
MeanHitting mean_hitting(const TorusGeom& geom, const SiteSet& V, std::uint64_t n,
                         std::uint64_t seed, unsigned workers = 1);

// l-infinity diameter of a finite Z^d set.
std::int64_t zd_diameter(const std::vector<ZdPoint>& A);

// Inner boundary: points of A with at least one neighbor outside A.
std::vector<ZdPoint> inner_boundary_zd(const std::vector<ZdPoint>& A, int d);

}  // namespace tfrg
