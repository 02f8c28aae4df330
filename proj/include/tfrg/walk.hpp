#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tfrg/lattice.hpp"
#include "tfrg/rng.hpp"
#include "tfrg/util.hpp"

namespace tfrg {

// Simple random walk state on the torus.
class TorusWalker {
public:
    TorusWalker(const TorusGeom& geom, Site start)
        : geom_(&geom), site_(start), coords_(geom.coords_of(start)) {}

    Site pos() const { return site_; }

    void step(Rng& rng) {
        int dir = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(geom_->d)));
        int axis = dir >> 1;
        std::int64_t& c = coords_[axis];
        std::uint64_t stride = geom_->strides[axis];
        if ((dir & 1) == 0) {
            if (++c == geom_->N) {
                c = 0;
                site_ -= stride * (geom_->N - 1);
            } else {
                site_ += stride;
            }
        } else {
            if (c-- == 0) {
                c = geom_->N - 1;
                site_ += stride * (geom_->N - 1);
            } else {
                site_ -= stride;
            }
        }
    }

private:
    const TorusGeom* geom_;
    Site site_;
    std::vector<std::int64_t> coords_;
};

struct WalkConfig {
    TorusGeom geom;
    std::uint64_t steps = 0;                 // horizon, typically floor(u * N^d)
    std::optional<Site> start;               // nullopt = uniform start from the seed stream
    std::uint64_t seed = 0;
    bool continuous_time = false;
    std::uint64_t step_cap = std::uint64_t{1} << 36;  // time-budget guard
};

struct VisitedMask {
    TorusGeom geom;
    DenseBitset bits;
    std::uint64_t visit_count = 0;  // number of marked sites

    bool visited(Site s) const { return bits.get(s); }
};

// Successive return/end times of walk excursions between A and B. U uses the
// sentinel kNoEnd when the excursion never closes within the step budget.
struct ExcursionRecord {
    static constexpr std::uint64_t kNoEnd = ~std::uint64_t{0};
    std::vector<std::pair<std::uint64_t, std::uint64_t>> excursions;  // (R_k, U_k)
    std::uint64_t k_u = 0;  // number of returns R_k <= horizon
    std::vector<Site> trajectory;  // filled only when recording was requested
};

// Marks the sites {X_0, ..., X_steps}; deterministic given cfg.seed.
VisitedMask walk_trace(const WalkConfig& cfg);

// Runs the same walk as walk_trace but only reports whether it enters
// `target` within the horizon (early exit on first hit). Same RNG stream.
bool walk_hits(const WalkConfig& cfg, const DenseBitset& target);

// First entrance time of `target` from a uniform start (step count, capped).
std::optional<std::uint64_t> hitting_time(const TorusGeom& geom, const DenseBitset& target,
                                          std::uint64_t seed, std::uint64_t step_cap);

// Excursion decomposition: R_k = k-th entrance of A, U_k = first time after
// R_k at which the trailing window of length t_star is disjoint from B.
ExcursionRecord excursions(const TorusGeom& geom, const SiteSet& A, const SiteSet& B,
                           std::uint64_t t_star, std::uint64_t horizon, std::uint64_t seed,
                           bool record_trajectory = false,
                           std::uint64_t extension_cap = 0);

// default regeneration time: ceil((N ln N)^2)
std::uint64_t regeneration_time(std::int64_t N);

struct CtWalkResult {
    VisitedMask mask;
    std::uint64_t jumps = 0;
};

// Continuous-time walk up to real time t_end: Poisson(t_end) jumps, then the
// embedded discrete trace.
CtWalkResult ct_walk(const TorusGeom& geom, double t_end, std::uint64_t seed);

}  // namespace tfrg
