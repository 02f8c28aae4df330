#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "tfrg/interlace.hpp"

using namespace tfrg;

TEST_CASE("a zero-level sample is empty and deterministic") {
    InterlacementSampler sm(3, 2);
    InterlacementSample s = sm.sample(0.0, 42);
    CHECK(s.J == 0);
    CHECK(s.trace_count == 0);
    CHECK(s.trace.popcount() == 0);
    CHECK(s.entry_points.empty());

    InterlacementSample a = sm.sample(1.5, 7), b = sm.sample(1.5, 7);
    CHECK(a.J == b.J);
    CHECK(a.trace == b.trace);
    CHECK(a.entry_points == b.entry_points);
    CHECK(a.trace_count == a.trace.popcount());
}

TEST_CASE("trace bookkeeping and entry points") {
    InterlacementSampler sm(3, 3);
    const ZdBox& box = sm.box();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        InterlacementSample s = sm.sample(2.0, seed);
        CHECK(s.trace_count == s.trace.popcount());
        CHECK(s.trace.size() == box.total);
        CHECK(s.entry_points.size() <= s.J);
        std::vector<std::int64_t> c(3);
        for (std::uint64_t e : s.entry_points) {
            box.coords(e, c.data());
            std::int64_t m = 0;
            for (int i = 0; i < 3; ++i) m = std::max<std::int64_t>(m, std::llabs(c[i]));
            CHECK(m == 3);  // walks enter through the shell
        }
    }
}

TEST_CASE("walk count follows a Poisson law with rate u times capacity") {
    InterlacementSampler sm(3, 2);
    const double u = 1.0;
    const double lambda = u * sm.capacity();
    const int n = 2000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        double J = static_cast<double>(sm.sample(u, 10000 + i).J);
        sum += J;
        sumsq += J * J;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    double se = std::sqrt(lambda / n);
    CHECK(std::abs(mean - lambda) < 4 * se);
    CHECK(std::abs(var - lambda) < 0.25 * lambda);
}

TEST_CASE("vacancy of a single site follows the exponential capacity law") {
    InterlacementSampler sm(3, 2);
    VacancyEstimate est = sm.vacancy_prob({{0, 0, 0}}, 1.0, 4000, 99, 4);
    CHECK(est.n == 4000);
    CHECK(est.cap_v == doctest::Approx(0.6595).epsilon(1e-2));
    CHECK(est.p_theory == doctest::Approx(std::exp(-est.cap_v)));
    CHECK(std::abs(est.p_hat - est.p_theory) < 4 * est.stderr_ + 2 * est.bias_bound);
    CHECK(est.bias_bound > 0.0);

    VacancyEstimate empty = sm.vacancy_prob({}, 1.0, 10, 99);
    CHECK(empty.p_hat == 1.0);
    CHECK(empty.cap_v == 0.0);
}

TEST_CASE("coupled samples nest pointwise") {
    InterlacementSampler sm(3, 2);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        CoupledSample cs = sm.sample_coupled(0.7, 1.3, seed);
        CHECK(cs.lo.J <= cs.hi.J);
        CHECK(cs.lo.trace_count <= cs.hi.trace_count);
        CHECK(cs.lo.trace_count == cs.lo.trace.popcount());
        CHECK(cs.hi.trace_count == cs.hi.trace.popcount());
        for (std::uint64_t i = 0; i < cs.lo.trace.size(); ++i)
            if (cs.lo.trace.get(i)) CHECK(cs.hi.trace.get(i));
    }
    CoupledSample eq = sm.sample_coupled(1.0, 1.0, 5);
    CHECK(eq.lo.trace == eq.hi.trace);
    CHECK(eq.lo.J == eq.hi.J);
}

TEST_CASE("thinned low-level walk count keeps the right rate") {
    InterlacementSampler sm(3, 2);
    const double u_lo = 0.5, u_hi = 2.0;
    const double lambda = u_lo * sm.capacity();
    const int n = 1500;
    double sum = 0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(sm.sample_coupled(u_lo, u_hi, 777 + i).lo.J);
    double mean = sum / n;
    CHECK(std::abs(mean - lambda) < 4 * std::sqrt(lambda / n));
}

TEST_CASE("rejection sampling agrees with the exact equilibrium route") {
    InterlacementSampler exact(3, 2, 0, InterlacementSampler::EqMethod::Exact);
    InterlacementSampler rej(3, 2, 0, InterlacementSampler::EqMethod::Rejection, 1, 100000, 4);
    CHECK(exact.method() == "exact-extrapolated");
    CHECK(rej.method() == "rejection");
    // pilot has ~100k Bernoulli draws: relative error well under 2%
    CHECK(rej.capacity() == doctest::Approx(exact.capacity()).epsilon(0.05));
    InterlacementSample s = rej.sample(1.0, 3);
    CHECK(s.trace_count == s.trace.popcount());

    InterlacementSampler mc(3, 2, 0, InterlacementSampler::EqMethod::MonteCarlo, 1, 100000, 4);
    CHECK(mc.method() == "monte-carlo");
    CHECK(mc.capacity() == doctest::Approx(exact.capacity()).epsilon(0.05));
}

TEST_CASE("vacant component stats describe the complement of the trace") {
    InterlacementSampler sm(3, 3);
    ComponentStats st = sm.vacant_component_stats(1.0, 11);
    InterlacementSample s = sm.sample(1.0, 11);
    CHECK(st.geom.N == 7);
    CHECK(st.geom.total == 343);
    CHECK(st.vacant_count == 343 - s.trace_count);
    CHECK(st.mode == GridMode::FreeBox);
}

TEST_CASE("constructor and sampling preconditions") {
    CHECK_THROWS(InterlacementSampler(2, 2));
    CHECK_THROWS(InterlacementSampler(3, 0));
    CHECK_THROWS(InterlacementSampler(3, 4, 8));  // R_kill < 4r
    InterlacementSampler sm(3, 2);
    CHECK_THROWS(sm.sample(-0.5, 1));
    CHECK_THROWS(sm.vacancy_prob({{5, 0, 0}}, 1.0, 10, 1));  // outside B(0,r)
    CHECK_THROWS(sm.vacancy_prob({{0, 0, 0}}, 1.0, 0, 1));
    CHECK_THROWS(sm.sample_coupled(2.0, 1.0, 1));
}
