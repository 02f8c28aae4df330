#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfrg/components.hpp"
#include "tfrg/lattice.hpp"
#include "tfrg/potential.hpp"
#include "tfrg/util.hpp"

namespace tfrg {

// One realization of the interlacement set restricted to B(0,r): J walks
// launched from the normalized equilibrium measure of the box, truncated at
// the first exit from B(0,R_kill).
struct InterlacementSample {
    int d = 0;
    std::int64_t r = 0;
    double u = 0.0;
    std::int64_t R_kill = 0;
    std::uint64_t J = 0;
    std::uint64_t seed = 0;
    DenseBitset trace;                   // over ZdBox(d, r) flat indices
    std::uint64_t trace_count = 0;       // number of traced box cells
    std::vector<std::uint64_t> entry_points;  // first in-box cell of each walk that hit the box
};

struct VacancyEstimate {
    double p_hat = 0.0;
    double stderr_ = 0.0;
    double p_theory = 0.0;
    double cap_v = 0.0;
    double bias_bound = 0.0;  // truncation bias proxy (r / R_kill)^(d-2)
    bool bias_flagged = false;
    std::uint64_t n = 0;
    std::uint64_t vacant = 0;
};

struct CoupledSample {
    InterlacementSample lo;  // level u_lo; trace is a subset of hi.trace
    InterlacementSample hi;  // level u_hi
};

// Sampler for a fixed box B(0,r). The equilibrium data of the box is set up
// once at construction. Exact: extrapolated harmonic solver (when its box
// fits in memory) with start points drawn from the stored weights.
// MonteCarlo: per-boundary-point escape frequencies. Rejection: start points
// drawn at sample time by proposing a uniform shell point and accepting when
// a test walk escapes to R_kill without returning to the ball; this needs no
// stored boundary and is the route for boxes with millions of shell points.
class InterlacementSampler {
public:
    enum class EqMethod { Auto, Exact, MonteCarlo, Rejection };

    InterlacementSampler(int d, std::int64_t r, std::int64_t R_kill = 0,
                         EqMethod method = EqMethod::Auto, std::uint64_t cal_seed = 1,
                         std::uint64_t cal_samples = 200000, unsigned workers = 1);

    int d() const { return d_; }
    std::int64_t r() const { return r_; }
    std::int64_t R_kill() const { return R_kill_; }
    double capacity() const { return capacity_; }
    const std::string& method() const { return method_; }
    const ZdBox& box() const { return box_; }
    const std::vector<ZdPoint>& boundary() const { return boundary_; }
    const std::vector<double>& weights() const { return weights_; }

    InterlacementSample sample(double u, std::uint64_t seed) const;

    // P[trace cap V = emptyset] over n independent samples, against the
    // exp(-u cap(V)) prediction. Each sample stops at its first V hit.
    VacancyEstimate vacancy_prob(const std::vector<ZdPoint>& V, double u, std::uint64_t n,
                                 std::uint64_t seed, unsigned workers = 1) const;

    // Components of the vacant set of one sample (free-boundary box).
    ComponentStats vacant_component_stats(double u, std::uint64_t seed) const;

    // Monotone coupling by Poisson thinning: draw J ~ Poisson(u_hi cap),
    // keep each walk at the low level with probability u_lo / u_hi. The two
    // traces come from the same trajectories, so lo.trace is contained in
    // hi.trace pointwise.
    CoupledSample sample_coupled(double u_lo, double u_hi, std::uint64_t seed) const;

private:
    int d_;
    std::int64_t r_;
    std::int64_t R_kill_;
    ZdBox box_;
    std::vector<ZdPoint> boundary_;  // empty in Rejection mode
    std::vector<double> weights_;    // equilibrium weights, same order as boundary_
    std::vector<double> cdf_;        // normalized cumulative weights for start sampling
    double capacity_ = 0.0;
    double shell_count_ = 0.0;  // number of points on the inner-boundary shell
    std::string method_;

    ZdPoint draw_start(Rng& rng) const;
    ZdPoint uniform_shell_point(Rng& rng) const;
    bool escapes_without_return(const ZdPoint& start, Rng& rng) const;
};

}  // namespace tfrg
