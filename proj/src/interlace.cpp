#include "tfrg/interlace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tfrg/rng.hpp"

namespace tfrg {

namespace {

constexpr std::uint64_t kWalkStepCap = std::uint64_t{1} << 33;

// in-box trace of one truncated walk, consecutive duplicates suppressed
void walk_cells(const ZdBox& box, std::int64_t R_kill, const ZdPoint& start, Rng& rng,
                std::vector<std::uint64_t>& cells) {
    const int d = box.d;
    const std::int64_t r = box.R;
    std::vector<std::int64_t> c = start;
    int out_r = 0;
    for (int i = 0; i < d; ++i)
        if (c[i] < -r || c[i] > r) ++out_r;
    std::uint64_t last = ~std::uint64_t{0};
    for (std::uint64_t t = 0;; ++t) {
        if (t > kWalkStepCap) throw std::runtime_error("interlacement walk exceeded step cap");
        if (out_r == 0) {
            std::uint64_t idx = box.index(c.data());
            if (idx != last) {
                cells.push_back(idx);
                last = idx;
            }
        }
        int dir = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(d)));
        int axis = dir >> 1;
        bool was_out = c[axis] < -r || c[axis] > r;
        c[axis] += (dir & 1) ? -1 : 1;
        if (c[axis] < -R_kill || c[axis] > R_kill) return;
        bool is_out = c[axis] < -r || c[axis] > r;
        out_r += (is_out ? 1 : 0) - (was_out ? 1 : 0);
    }
}

// early-exit variant: does the walk hit `watch` before leaving B(0,R_kill)?
bool walk_hits_watch(const ZdBox& box, std::int64_t R_kill, const ZdPoint& start, Rng& rng,
                     const DenseBitset& watch) {
    const int d = box.d;
    const std::int64_t r = box.R;
    std::vector<std::int64_t> c = start;
    int out_r = 0;
    for (int i = 0; i < d; ++i)
        if (c[i] < -r || c[i] > r) ++out_r;
    for (std::uint64_t t = 0;; ++t) {
        if (t > kWalkStepCap) throw std::runtime_error("interlacement walk exceeded step cap");
        if (out_r == 0 && watch.get(box.index(c.data()))) return true;
        int dir = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(d)));
        int axis = dir >> 1;
        bool was_out = c[axis] < -r || c[axis] > r;
        c[axis] += (dir & 1) ? -1 : 1;
        if (c[axis] < -R_kill || c[axis] > R_kill) return false;
        bool is_out = c[axis] < -r || c[axis] > r;
        out_r += (is_out ? 1 : 0) - (was_out ? 1 : 0);
    }
}

}  // namespace

InterlacementSampler::InterlacementSampler(int d, std::int64_t r, std::int64_t R_kill,
                                           EqMethod method, std::uint64_t cal_seed,
                                           std::uint64_t cal_samples, unsigned workers)
    : d_(d), r_(r) {
    if (d < 3) throw std::invalid_argument("InterlacementSampler: dimension must be >= 3");
    if (r < 1) throw std::invalid_argument("InterlacementSampler: box radius must be >= 1");
    R_kill_ = R_kill > 0 ? R_kill : std::max<std::int64_t>(8 * r, 64);
    if (R_kill_ < 4 * r)
        throw std::invalid_argument("InterlacementSampler: R_kill must be >= 4r");
    box_ = ZdBox::make(d, r);

    shell_count_ = std::pow(2.0 * static_cast<double>(r) + 1.0, d) -
                   std::pow(2.0 * static_cast<double>(r) - 1.0, d);
    if (method == EqMethod::Auto) {
        // exact route solves a box of side 2*R2 + 1 with R2 = 2*max(32, 16r)
        std::int64_t R2 = 2 * std::max<std::int64_t>(32, 16 * r);
        double cells = std::pow(2.0 * static_cast<double>(R2) + 1.0, d);
        method = cells <= 4e7 ? EqMethod::Exact : EqMethod::Rejection;
    }
    if (method == EqMethod::Exact) {
        std::vector<ZdPoint> ball = linf_ball_zd(ZdPoint(d, 0), r, d);
        EquilibriumMeasure eq = equilibrium(ball, d, 0, 0, 1e-10, workers);
        boundary_ = eq.boundary;
        weights_ = eq.weights;
        capacity_ = eq.capacity;
        method_ = "exact-extrapolated";
    } else if (method == EqMethod::MonteCarlo) {
        std::vector<ZdPoint> ball = linf_ball_zd(ZdPoint(d, 0), r, d);
        std::uint64_t per_point = std::max<std::uint64_t>(
            1, cal_samples / static_cast<std::uint64_t>(shell_count_));
        CapacityMc mc = capacity_mc(ball, d, R_kill_, per_point, cal_seed, workers);
        boundary_ = mc.boundary;
        weights_ = mc.freqs;
        capacity_ = mc.cap_hat;
        method_ = "monte-carlo";
    } else {
        // pilot run: escape frequency of uniform shell starts fixes the
        // Poisson rate; starts are then drawn by the same accept/reject test
        std::vector<std::uint64_t> acc(cal_samples, 0);
        parallel_replicas(cal_samples, std::max(1u, workers), [&](std::size_t i) {
            Rng rng = Rng::stream(cal_seed, i);
            acc[i] = escapes_without_return(uniform_shell_point(rng), rng) ? 1 : 0;
        });
        std::uint64_t total_acc = std::accumulate(acc.begin(), acc.end(), std::uint64_t{0});
        if (total_acc == 0)
            throw std::runtime_error("InterlacementSampler: pilot found no escaping walks");
        capacity_ = shell_count_ * static_cast<double>(total_acc) /
                    static_cast<double>(cal_samples);
        method_ = "rejection";
    }

    if (!weights_.empty()) {
        double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
        if (!(total > 0.0))
            throw std::runtime_error("InterlacementSampler: degenerate equilibrium weights");
        cdf_.resize(weights_.size());
        double run = 0.0;
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            run += weights_[i] / total;
            cdf_[i] = run;
        }
        cdf_.back() = 1.0;
    }
}

ZdPoint InterlacementSampler::uniform_shell_point(Rng& rng) const {
    ZdPoint p(d_);
    for (;;) {
        std::int64_t m = 0;
        for (int i = 0; i < d_; ++i) {
            p[i] = static_cast<std::int64_t>(rng.below(2 * static_cast<std::uint64_t>(r_) + 1)) -
                   r_;
            m = std::max<std::int64_t>(m, std::llabs(p[i]));
        }
        if (m == r_) return p;
    }
}

bool InterlacementSampler::escapes_without_return(const ZdPoint& start, Rng& rng) const {
    std::vector<std::int64_t> c = start;
    for (std::uint64_t t = 0;; ++t) {
        if (t > kWalkStepCap) throw std::runtime_error("interlacement walk exceeded step cap");
        int dir = static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(d_)));
        int axis = dir >> 1;
        c[axis] += (dir & 1) ? -1 : 1;
        std::int64_t a = std::llabs(c[axis]);
        if (a >= R_kill_) return true;
        std::int64_t m = 0;
        for (int i = 0; i < d_; ++i) m = std::max<std::int64_t>(m, std::llabs(c[i]));
        if (m <= r_) return false;
    }
}

ZdPoint InterlacementSampler::draw_start(Rng& rng) const {
    if (!cdf_.empty()) {
        double x = rng.uniform();
        std::size_t k = static_cast<std::size_t>(
            std::lower_bound(cdf_.begin(), cdf_.end(), x) - cdf_.begin());
        return boundary_[std::min(k, boundary_.size() - 1)];
    }
    for (;;) {
        ZdPoint p = uniform_shell_point(rng);
        if (escapes_without_return(p, rng)) return p;
    }
}

InterlacementSample InterlacementSampler::sample(double u, std::uint64_t seed) const {
    if (u < 0.0) throw std::invalid_argument("sample: level u must be >= 0");
    InterlacementSample s;
    s.d = d_;
    s.r = r_;
    s.u = u;
    s.R_kill = R_kill_;
    s.seed = seed;
    s.trace = DenseBitset(box_.total);
    Rng rng = Rng::stream(seed, 0);
    s.J = u > 0.0 ? rng.poisson(u * capacity_) : 0;
    std::vector<std::uint64_t> cells;
    for (std::uint64_t j = 0; j < s.J; ++j) {
        cells.clear();
        walk_cells(box_, R_kill_, draw_start(rng), rng, cells);
        if (!cells.empty()) s.entry_points.push_back(cells.front());
        for (std::uint64_t idx : cells)
            if (s.trace.test_and_set(idx)) ++s.trace_count;
    }
    return s;
}

VacancyEstimate InterlacementSampler::vacancy_prob(const std::vector<ZdPoint>& V, double u,
                                                   std::uint64_t n, std::uint64_t seed,
                                                   unsigned workers) const {
    if (n < 1) throw std::invalid_argument("vacancy_prob: need n >= 1");
    DenseBitset watch(box_.total);
    for (const auto& p : V) {
        if (!box_.inside(p))
            throw std::invalid_argument("vacancy_prob: V must lie inside B(0,r)");
        watch.set(box_.index(p));
    }

    VacancyEstimate est;
    est.n = n;
    if (V.empty() || u == 0.0) {
        est.p_hat = 1.0;
        est.p_theory = 1.0;
        est.vacant = n;
        est.cap_v = V.empty() ? 0.0 : equilibrium(V, d_).capacity;
        return est;
    }

    std::vector<std::uint8_t> vacant_flags(n, 0);
    parallel_replicas(n, workers, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        std::uint64_t J = rng.poisson(u * capacity_);
        bool hit = false;
        for (std::uint64_t j = 0; j < J && !hit; ++j)
            hit = walk_hits_watch(box_, R_kill_, draw_start(rng), rng, watch);
        vacant_flags[i] = hit ? 0 : 1;
    });
    for (std::uint8_t f : vacant_flags) est.vacant += f;

    est.p_hat = static_cast<double>(est.vacant) / static_cast<double>(n);
    est.stderr_ = std::sqrt(std::max(est.p_hat * (1.0 - est.p_hat), 1.0 / static_cast<double>(n)) /
                            static_cast<double>(n));
    est.cap_v = equilibrium(V, d_).capacity;
    est.p_theory = std::exp(-u * est.cap_v);
    est.bias_bound =
        std::pow(static_cast<double>(r_) / static_cast<double>(R_kill_), d_ - 2) * est.p_theory;
    est.bias_flagged = est.bias_bound > 0.1 * est.stderr_;
    return est;
}

ComponentStats InterlacementSampler::vacant_component_stats(double u, std::uint64_t seed) const {
    InterlacementSample s = sample(u, seed);
    TorusGeom grid = TorusGeom::make_grid(d_, 2 * r_ + 1);
    return label_components(grid, s.trace, Adjacency::NN, GridMode::FreeBox);
}

CoupledSample InterlacementSampler::sample_coupled(double u_lo, double u_hi,
                                                   std::uint64_t seed) const {
    if (!(0.0 <= u_lo && u_lo <= u_hi))
        throw std::invalid_argument("sample_coupled: need 0 <= u_lo <= u_hi");
    CoupledSample cs;
    for (InterlacementSample* s : {&cs.lo, &cs.hi}) {
        s->d = d_;
        s->r = r_;
        s->R_kill = R_kill_;
        s->seed = seed;
        s->trace = DenseBitset(box_.total);
    }
    cs.lo.u = u_lo;
    cs.hi.u = u_hi;

    Rng rng = Rng::stream(seed, 0);
    std::uint64_t J = u_hi > 0.0 ? rng.poisson(u_hi * capacity_) : 0;
    cs.hi.J = J;
    const double keep = u_hi > 0.0 ? u_lo / u_hi : 0.0;
    std::vector<std::uint64_t> cells;
    for (std::uint64_t j = 0; j < J; ++j) {
        bool in_lo = rng.uniform() < keep;
        if (in_lo) ++cs.lo.J;
        cells.clear();
        walk_cells(box_, R_kill_, draw_start(rng), rng, cells);
        if (!cells.empty()) {
            cs.hi.entry_points.push_back(cells.front());
            if (in_lo) cs.lo.entry_points.push_back(cells.front());
        }
        for (std::uint64_t idx : cells) {
            if (cs.hi.trace.test_and_set(idx)) ++cs.hi.trace_count;
            if (in_lo && cs.lo.trace.test_and_set(idx)) ++cs.lo.trace_count;
        }
    }
    return cs;
}

}  // namespace tfrg
