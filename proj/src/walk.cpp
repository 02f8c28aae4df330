#include "tfrg/walk.hpp"

#include <cmath>
#include <stdexcept>

namespace tfrg {

namespace {

Site draw_start(const WalkConfig& cfg, Rng& rng) {
    if (cfg.start) {
        if (*cfg.start >= cfg.geom.total) throw std::invalid_argument("walk: start out of range");
        return *cfg.start;
    }
    return rng.below(cfg.geom.total);
}

}  // namespace

VisitedMask walk_trace(const WalkConfig& cfg) {
    if (cfg.steps > cfg.step_cap) throw std::invalid_argument("walk_trace: steps exceed step_cap");
    Rng rng(cfg.seed);
    Site start = draw_start(cfg, rng);
    VisitedMask out{cfg.geom, DenseBitset(cfg.geom.total), 0};
    TorusWalker w(cfg.geom, start);
    out.bits.set(start);
    out.visit_count = 1;
    for (std::uint64_t t = 0; t < cfg.steps; ++t) {
        w.step(rng);
        if (out.bits.test_and_set(w.pos())) ++out.visit_count;
    }
    return out;
}

bool walk_hits(const WalkConfig& cfg, const DenseBitset& target) {
    if (cfg.steps > cfg.step_cap) throw std::invalid_argument("walk_hits: steps exceed step_cap");
    Rng rng(cfg.seed);
    Site start = draw_start(cfg, rng);
    TorusWalker w(cfg.geom, start);
    if (target.get(start)) return true;
    for (std::uint64_t t = 0; t < cfg.steps; ++t) {
        w.step(rng);
        if (target.get(w.pos())) return true;
    }
    return false;
}

std::optional<std::uint64_t> hitting_time(const TorusGeom& geom, const DenseBitset& target,
                                          std::uint64_t seed, std::uint64_t step_cap) {
    Rng rng(seed);
    Site start = rng.below(geom.total);
    TorusWalker w(geom, start);
    if (target.get(start)) return 0;
    for (std::uint64_t t = 1; t <= step_cap; ++t) {
        w.step(rng);
        if (target.get(w.pos())) return t;
    }
    return std::nullopt;
}

std::uint64_t regeneration_time(std::int64_t N) {
    double v = static_cast<double>(N) * std::log(static_cast<double>(N));
    return static_cast<std::uint64_t>(std::ceil(v * v));
}

ExcursionRecord excursions(const TorusGeom& geom, const SiteSet& A, const SiteSet& B,
                           std::uint64_t t_star, std::uint64_t horizon, std::uint64_t seed,
                           bool record_trajectory, std::uint64_t extension_cap) {
    if (t_star == 0) throw std::invalid_argument("excursions: t_star must be positive");
    for (Site s : A.sites)
        if (!B.contains(s)) throw std::invalid_argument("excursions: A not contained in B");
    if (A.empty()) throw std::invalid_argument("excursions: A is empty");
    if (extension_cap == 0) extension_cap = 10 * t_star;

    DenseBitset in_a = A.as_bitset(geom);
    DenseBitset in_b = B.as_bitset(geom);
    const bool b_is_everything = (B.size() == geom.total);

    Rng rng(seed);
    Site start = rng.below(geom.total);
    TorusWalker w(geom, start);

    ExcursionRecord rec;
    if (record_trajectory) {
        rec.trajectory.reserve(horizon + 1);
        rec.trajectory.push_back(start);
    }

    bool open = false;           // inside an excursion [R_k, U_k)
    std::uint64_t last_b = 0;    // last time the walk was in B (valid while open)
    std::uint64_t t = 0;

    auto visit = [&](Site s, std::uint64_t time) -> bool {
        // returns true when the caller should stop
        if (!open) {
            if (time > horizon) return true;
            if (in_a.get(s)) {
                rec.excursions.emplace_back(time, ExcursionRecord::kNoEnd);
                ++rec.k_u;
                open = true;
                last_b = time;
                if (b_is_everything) return true;  // U_1 = infinity, nothing more to learn
            }
            return false;
        }
        if (in_b.get(s)) last_b = time;
        if (time - last_b >= t_star) {
            rec.excursions.back().second = time;
            open = false;
        }
        return false;
    };

    if (visit(start, 0)) return rec;
    for (;;) {
        ++t;
        if (t > horizon + extension_cap) break;       // open excursion left with U = kNoEnd
        if (!open && t > horizon) break;
        w.step(rng);
        if (record_trajectory) rec.trajectory.push_back(w.pos());
        if (visit(w.pos(), t)) break;
    }
    return rec;
}

CtWalkResult ct_walk(const TorusGeom& geom, double t_end, std::uint64_t seed) {
    if (t_end < 0) throw std::invalid_argument("ct_walk: negative time");
    Rng rng(seed);
    std::uint64_t jumps = t_end > 0 ? rng.poisson(t_end) : 0;
    Site start = rng.below(geom.total);
    VisitedMask mask{geom, DenseBitset(geom.total), 1};
    mask.bits.set(start);
    TorusWalker w(geom, start);
    for (std::uint64_t j = 0; j < jumps; ++j) {
        w.step(rng);
        if (mask.bits.test_and_set(w.pos())) ++mask.visit_count;
    }
    return {std::move(mask), jumps};
}

}  // namespace tfrg
