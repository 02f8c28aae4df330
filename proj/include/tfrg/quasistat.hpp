#pragma once

#include <cstdint>
#include <vector>

#include "tfrg/lattice.hpp"
#include "tfrg/util.hpp"

namespace tfrg {

// One-step averaging over neighbors that stay outside B, as an implicit
// matrix-vector product. Vectors are full length N^d; entries on B are
// ignored on input and zero on output.
struct RestrictedOperator {
    const TorusGeom* geom = nullptr;
    DenseBitset excluded;  // the set B

    RestrictedOperator(const TorusGeom& g, const SiteSet& B)
        : geom(&g), excluded(B.as_bitset(g)) {}

    void apply(const std::vector<double>& x, std::vector<double>& y,
               unsigned workers = 1) const;
};

struct QuasiDist {
    std::vector<double> sigma;  // full length N^d, zero on B, sums to 1
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double residual = 0.0;  // ||P^B v1 - lambda1 v1||_inf
    std::uint64_t iterations = 0;
};

// Top eigenpair of P^B by power iteration from the uniform vector, lambda2 by
// deflated power iteration. Requires the complement of B to be nonempty and
// connected. B empty gives lambda1 = 1 and the uniform sigma.
QuasiDist quasistationary(const TorusGeom& geom, const SiteSet& B, double tol = 1e-12,
                          std::uint64_t max_iter = 0, unsigned workers = 1);

struct GapReport {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double gap = 0.0;
    double gap_scaled = 0.0;  // gap * N^2
};

GapReport gap_check(const TorusGeom& geom, const SiteSet& B, double tol = 1e-12,
                    unsigned workers = 1);

// P_x[Y_t = . | H_B > t] for the continuous-time walk killed on B, via
// uniformization (Poisson-weighted powers of P^B), accumulated in a shifted
// log scale so large t does not underflow. Full-length probability vector.
std::vector<double> conditional_distribution(const TorusGeom& geom, const SiteSet& B, Site x,
                                             double t, unsigned workers = 1);

struct MixingTv {
    double tv = 0.0;      // 0 when below double range; see log_tv
    double log_tv = 0.0;  // natural log of the total-variation distance
};

// Worst-start total-variation distance to uniform of the continuous-time walk
// at time t (no killing). Vertex transitivity makes the start irrelevant; the
// signed deviation delta_0 - uniform is evolved with per-step renormalization
// so distances far below double epsilon remain measurable on the log scale.
MixingTv mixing_tv(const TorusGeom& geom, double t, unsigned workers = 1);

}  // namespace tfrg
