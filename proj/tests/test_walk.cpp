#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "tfrg/lattice.hpp"
#include "tfrg/rng.hpp"
#include "tfrg/walk.hpp"

using namespace tfrg;

namespace {

// Reference walk driven directly off the generator: draws dir = below(2d),
// axis = dir/2, step +1 when dir is even, all arithmetic mod N on raw
// coordinate vectors. Independent of TorusWalker's incremental site updates.
std::vector<Site> reference_path(const TorusGeom& g, std::uint64_t seed,
                                 std::uint64_t steps, std::optional<Site> start) {
    Rng rng(seed);
    Site s0 = start ? *start : rng.below(g.total);
    std::vector<std::int64_t> c = g.coords_of(s0);
    std::vector<Site> path{s0};
    for (std::uint64_t t = 0; t < steps; ++t) {
        int dir = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(g.d)));
        int axis = dir >> 1;
        c[axis] = ((dir & 1) == 0) ? (c[axis] + 1) % g.N : (c[axis] + g.N - 1) % g.N;
        path.push_back(g.site_of(c));
    }
    return path;
}

}  // namespace

TEST_CASE("walk_trace marks exactly the reference path") {
    TorusGeom g = TorusGeom::make(3, 12);
    for (std::uint64_t seed : {1ull, 2ull, 77ull}) {
        WalkConfig cfg{g, 5000, std::nullopt, seed};
        VisitedMask m = walk_trace(cfg);
        auto path = reference_path(g, seed, cfg.steps, std::nullopt);
        std::set<Site> want(path.begin(), path.end());
        CHECK(m.visit_count == want.size());
        std::uint64_t marked = 0;
        for (Site s = 0; s < g.total; ++s) {
            bool got = m.visited(s);
            CHECK(got == (want.count(s) > 0));
            marked += got;
        }
        CHECK(marked == m.visit_count);
    }
}

TEST_CASE("walk_trace with a fixed start consumes no start draw") {
    TorusGeom g = TorusGeom::make(3, 8);
    WalkConfig cfg{g, 500, g.site_of({3, 3, 3}), 9};
    VisitedMask m = walk_trace(cfg);
    auto path = reference_path(g, 9, 500, g.site_of({3, 3, 3}));
    for (Site s : path) CHECK(m.visited(s));
    CHECK_THROWS(walk_trace(WalkConfig{g, 500, g.total, 9}));
    CHECK_THROWS(walk_trace(WalkConfig{g, 10, std::nullopt, 9, false, 5}));
}

TEST_CASE("walk_hits agrees with the trace of the same configuration") {
    TorusGeom g = TorusGeom::make(3, 10);
    DenseBitset target(g.total);
    for (Site s : linf_ball(g.site_of({5, 5, 5}), 1, g).sites) target.set(s);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        WalkConfig cfg{g, 800, std::nullopt, seed};
        VisitedMask m = walk_trace(cfg);
        bool overlap = false;
        for (Site s = 0; s < g.total && !overlap; ++s) overlap = m.visited(s) && target.get(s);
        CHECK(walk_hits(cfg, target) == overlap);
    }
}

TEST_CASE("hitting_time is the first entrance along the reference path") {
    TorusGeom g = TorusGeom::make(3, 8);
    DenseBitset target(g.total);
    target.set(g.site_of({0, 0, 0}));
    target.set(g.site_of({4, 4, 4}));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto ht = hitting_time(g, target, seed, 200000);
        REQUIRE(ht.has_value());
        auto path = reference_path(g, seed, *ht, std::nullopt);
        CHECK(target.get(path.back()));
        for (std::uint64_t t = 0; t < *ht; ++t) CHECK_FALSE(target.get(path[t]));
    }
    DenseBitset unreachable(g.total);  // empty target: cap kicks in
    CHECK_FALSE(hitting_time(g, unreachable, 0, 1000).has_value());
}

TEST_CASE("excursion times replay from the recorded trajectory") {
    TorusGeom g = TorusGeom::make(3, 10);
    SiteSet A = linf_ball(g.site_of({5, 5, 5}), 1, g);
    SiteSet B = linf_ball(g.site_of({5, 5, 5}), 3, g);
    const std::uint64_t t_star = 40, horizon = 20000;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ExcursionRecord rec = excursions(g, A, B, t_star, horizon, seed, true);
        const auto& traj = rec.trajectory;
        REQUIRE(!traj.empty());

        // reference scan over the trajectory
        DenseBitset in_a = A.as_bitset(g), in_b = B.as_bitset(g);
        std::vector<std::pair<std::uint64_t, std::uint64_t>> want;
        std::uint64_t want_ku = 0;
        bool open = false;
        std::uint64_t last_b = 0;
        for (std::uint64_t t = 0; t < traj.size(); ++t) {
            Site s = traj[t];
            if (!open) {
                if (t > horizon) break;
                if (in_a.get(s)) {
                    want.emplace_back(t, ExcursionRecord::kNoEnd);
                    ++want_ku;
                    open = true;
                    last_b = t;
                }
            } else {
                if (in_b.get(s)) last_b = t;
                if (t - last_b >= t_star) {
                    want.back().second = t;
                    open = false;
                }
            }
        }
        CHECK(rec.k_u == want_ku);
        CHECK(rec.excursions == want);

        // sanity: entrances really lie in A, closures outside B for t_star steps
        for (auto [r, u] : rec.excursions) {
            CHECK(in_a.get(traj[r]));
            if (u != ExcursionRecord::kNoEnd) {
                REQUIRE(u >= t_star);
                for (std::uint64_t t = u - t_star + 1; t <= u; ++t)
                    CHECK_FALSE(in_b.get(traj[t]));
            }
        }
    }
}

TEST_CASE("excursions validates its inputs") {
    TorusGeom g = TorusGeom::make(3, 10);
    SiteSet A = linf_ball(0, 1, g);
    SiteSet B = linf_ball(0, 2, g);
    CHECK_THROWS(excursions(g, A, B, 0, 100, 1));          // zero regeneration window
    CHECK_THROWS(excursions(g, B, A, 10, 100, 1));         // A not inside B
    CHECK_THROWS(excursions(g, SiteSet{}, B, 10, 100, 1)); // empty A
}

TEST_CASE("excursions with B equal to the whole torus stop after the first entrance") {
    TorusGeom g = TorusGeom::make(3, 6);
    SiteSet A = linf_ball(0, 1, g);
    std::vector<Site> all(g.total);
    for (Site s = 0; s < g.total; ++s) all[s] = s;
    SiteSet B = SiteSet::from(std::move(all), g);
    ExcursionRecord rec = excursions(g, A, B, 50, 100000, 3);
    CHECK(rec.k_u == 1);
    REQUIRE(rec.excursions.size() == 1);
    CHECK(rec.excursions[0].second == ExcursionRecord::kNoEnd);
}

TEST_CASE("continuous-time walk draws Poisson jump counts") {
    TorusGeom g = TorusGeom::make(3, 6);
    const double t_end = 30.0;
    const int n = 4000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        CtWalkResult r = ct_walk(g, t_end, 1000 + i);
        double v = static_cast<double>(r.jumps);
        sum += v;
        sumsq += v * v;
        CHECK(r.mask.visit_count >= 1);
        CHECK(r.mask.visit_count <= r.jumps + 1);
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    double se = std::sqrt(t_end / n);
    CHECK(std::abs(mean - t_end) < 5 * se);
    CHECK(std::abs(var - t_end) < 0.15 * t_end);

    CtWalkResult a = ct_walk(g, t_end, 42), b = ct_walk(g, t_end, 42);
    CHECK(a.jumps == b.jumps);
    CHECK(a.mask.bits == b.mask.bits);
    CHECK(ct_walk(g, 0.0, 42).jumps == 0);
    CHECK_THROWS(ct_walk(g, -1.0, 42));
}

TEST_CASE("regeneration time formula") {
    for (std::int64_t N : {6, 8, 64, 200}) {
        double v = N * std::log(static_cast<double>(N));
        CHECK(regeneration_time(N) == static_cast<std::uint64_t>(std::ceil(v * v)));
    }
}
