// Acceptance harness: twelve self-contained checks, one pass/fail line each.
// Exit code is the number of failed checks.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "tfrg/components.hpp"
#include "tfrg/experiments.hpp"
#include "tfrg/interlace.hpp"
#include "tfrg/lattice.hpp"
#include "tfrg/potential.hpp"
#include "tfrg/quasistat.hpp"
#include "tfrg/rng.hpp"
#include "tfrg/walk.hpp"

using namespace tfrg;

namespace {

const unsigned kWorkers = 8;
const std::uint64_t kSeed = 20260823;

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail, double secs) {
    std::printf("criterion %2d [%s] %-24s %s (%.1fs)\n", id, pass ? "PASS" : "FAIL", name,
                detail.c_str(), secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// Conjugate-gradient solve of the discrete Dirichlet problem on B(0,R):
// h = 1 on A, h = 0 outside the box, harmonic in between. Independent of the
// library's relaxation solver.
std::vector<double> cg_harmonic(const std::vector<ZdPoint>& A, int d, std::int64_t R,
                                ZdBox& box_out) {
    ZdBox box = ZdBox::make(d, R);
    box_out = box;
    std::vector<std::uint8_t> in_a(box.total, 0);
    for (const auto& p : A) in_a[box.index(p)] = 1;

    std::vector<std::int64_t> free_idx(box.total, -1);
    std::vector<std::uint64_t> free_cells;
    for (std::uint64_t i = 0; i < box.total; ++i)
        if (!in_a[i]) {
            free_idx[i] = static_cast<std::int64_t>(free_cells.size());
            free_cells.push_back(i);
        }

    const std::int64_t n = static_cast<std::int64_t>(free_cells.size());
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    std::vector<std::int64_t> c(d);
    for (std::int64_t k = 0; k < n; ++k) {
        trips.emplace_back(k, k, 2.0 * d);
        box.coords(free_cells[k], c.data());
        for (int a = 0; a < d; ++a) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                c[a] += sgn;
                if (c[a] >= -R && c[a] <= R) {
                    std::uint64_t nb = box.index(c.data());
                    if (in_a[nb]) rhs(k) += 1.0;
                    else trips.emplace_back(k, free_idx[nb], -1.0);
                }
                c[a] -= sgn;
            }
        }
    }
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trips.begin(), trips.end());
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-14);
    cg.compute(L);
    Eigen::VectorXd h = cg.solve(rhs);

    std::vector<double> full(box.total, 0.0);
    for (std::uint64_t i = 0; i < box.total; ++i)
        full[i] = in_a[i] ? 1.0 : h(free_idx[i]);
    return full;
}

// capacity of A at one killing radius: sum over A of the one-step escape mass
double cg_capacity_at(const std::vector<ZdPoint>& A, int d, std::int64_t R) {
    ZdBox box;
    std::vector<double> h = cg_harmonic(A, d, R, box);
    std::vector<std::uint8_t> in_a(box.total, 0);
    for (const auto& p : A) in_a[box.index(p)] = 1;
    double cap = 0.0;
    std::vector<std::int64_t> c(d);
    for (const auto& p : A) {
        double stay = 0.0;
        c = p;
        for (int a = 0; a < d; ++a) {
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                c[a] += sgn;
                if (c[a] >= -R && c[a] <= R) {
                    std::uint64_t nb = box.index(c.data());
                    stay += in_a[nb] ? 1.0 : h[nb];
                }
                c[a] -= sgn;
            }
        }
        cap += 1.0 - stay / (2.0 * d);
    }
    return cap;
}

double cg_capacity_extrapolated(const std::vector<ZdPoint>& A, int d, std::int64_t R1,
                                std::int64_t R2) {
    double q1 = cg_capacity_at(A, d, R1);
    double q2 = cg_capacity_at(A, d, R2);
    double g1 = std::pow(static_cast<double>(R1), 2 - d);
    double g2 = std::pow(static_cast<double>(R2), 2 - d);
    return (q2 * g1 - q1 * g2) / (g1 - g2);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

// ---------------------------------------------------------------------------

void criterion_1_vacancy() {
    Stopwatch sw;
    // kill radius 256 keeps the truncation bias of the sampler below the
    // statistical band at n = 1e5 (bias falls like 1/R_kill in d = 3)
    InterlacementSampler sm(3, 1, 256, InterlacementSampler::EqMethod::Exact, 1, 200000,
                            kWorkers);
    std::vector<std::vector<ZdPoint>> sets = {
        {ZdPoint(3, 0)},
        linf_ball_zd(ZdPoint(3, 0), 1, 3),
        {ZdPoint{0, 0, 0}, ZdPoint{1, 0, 0}}};
    bool pass = true;
    double worst = 0.0;
    std::uint64_t stream = 0;
    for (const auto& V : sets)
        for (double u : {0.5, 1.0, 2.0}) {
            VacancyEstimate e = sm.vacancy_prob(V, u, 100000, kSeed + 900 + stream++, kWorkers);
            double z = std::fabs(e.p_hat - e.p_theory) / e.stderr_;
            worst = std::max(worst, z);
            if (z > 3.0) pass = false;
        }
    report(1, "vacancy law", pass, fmt("9 checks, worst deviation %.2f sigma (limit 3)", worst),
           sw.seconds());
}

void criterion_2_capacity_golden() {
    Stopwatch sw;
    std::vector<ZdPoint> point{ZdPoint(3, 0)};
    double cap_lib = equilibrium(point, 3).capacity;
    double cap_oracle = cg_capacity_extrapolated(point, 3, 12, 24);
    bool pass = std::fabs(cap_lib - cap_oracle) <= 1e-3;

    std::vector<std::vector<ZdPoint>> sets = {
        point,
        linf_ball_zd(ZdPoint(3, 0), 1, 3),
        linf_ball_zd(ZdPoint(3, 0), 2, 3),
        {ZdPoint{0, 0, 0}, ZdPoint{1, 0, 0}},
        {ZdPoint{0, 0, 0}, ZdPoint{1, 0, 0}, ZdPoint{0, 1, 0}}};
    double worst = 0.0;
    for (std::size_t k = 0; k < sets.size(); ++k) {
        EquilibriumMeasure eq = equilibrium(sets[k], 3, 0, 0, 1e-10, kWorkers);
        CapacityMc mc = capacity_mc(sets[k], 3, 192, 400, kSeed + 40 + k, kWorkers);
        double z = std::fabs(mc.cap_hat - eq.capacity) / mc.stderr_;
        worst = std::max(worst, z);
        if (z > 3.0) pass = false;
    }
    report(2, "capacity golden values", pass,
           fmt("point |%.6f - %.6f| vs 1e-3; MC worst %.2f sigma on 5 sets", cap_lib,
               cap_oracle, worst),
           sw.seconds());
}

void criterion_3_capacity_scaling() {
    Stopwatch sw;
    std::vector<double> lx, ly;
    for (std::int64_t r = 2; r <= 16; ++r) {
        std::int64_t R1 = std::max<std::int64_t>(24, 3 * r);
        EquilibriumMeasure eq =
            equilibrium(linf_ball_zd(ZdPoint(3, 0), r, 3), 3, R1, 2 * R1, 1e-8, kWorkers);
        lx.push_back(std::log(static_cast<double>(r)));
        ly.push_back(std::log(eq.capacity));
    }
    double mx = mean_of(lx), my = mean_of(ly), num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    double slope = num / den;
    bool pass = slope >= 0.85 && slope <= 1.15;
    report(3, "capacity scaling", pass, fmt("log-log slope %.4f in [0.85, 1.15], r = 2..16", slope),
           sw.seconds());
}

void criterion_4_mean_hitting() {
    Stopwatch sw;
    TorusGeom g = TorusGeom::make(3, 40);
    MeanHitting mh = mean_hitting(g, linf_ball(0, 3, g), 10000, kSeed + 4, kWorkers);
    bool pass = mh.ratio_defined && std::fabs(mh.gloc_ratio - 1.0) <= 0.1;
    report(4, "mean hitting time", pass,
           fmt("N^3/(mean * cap) = %.4f, |ratio - 1| <= 0.1", mh.gloc_ratio), sw.seconds());
}

void criterion_5_quasistationary() {
    Stopwatch sw;
    TorusGeom g = TorusGeom::make(3, 8);
    SiteSet B = linf_ball(0, 2, g);
    QuasiDist qd = quasistationary(g, B, 1e-13, 0, kWorkers);

    // dense eigensolve oracle on the complement
    DenseBitset in_b = B.as_bitset(g);
    std::vector<std::int64_t> idx(g.total, -1);
    std::vector<Site> sites;
    for (Site s = 0; s < g.total; ++s)
        if (!in_b.get(s)) {
            idx[s] = static_cast<std::int64_t>(sites.size());
            sites.push_back(s);
        }
    const std::int64_t n = static_cast<std::int64_t>(sites.size());
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (std::int64_t a = 0; a < n; ++a)
        for (Site nb : neighbors(sites[a], g))
            if (idx[nb] >= 0) Q(a, idx[nb]) += 1.0 / 6.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    Eigen::VectorXd v = es.eigenvectors().col(n - 1);
    if (v.sum() < 0) v = -v;
    v /= v.sum();
    std::vector<double> sigma_dense(g.total, 0.0);
    for (std::int64_t k = 0; k < n; ++k) sigma_dense[sites[k]] = v(k);
    double sig_err = sup_diff(qd.sigma, sigma_dense);
    bool pass = sig_err <= 1e-8;

    // conditional law at the regeneration time, every admissible start
    double t_star = static_cast<double>(regeneration_time(8));
    double cond_err = 0.0;
    for (Site x : sites)
        cond_err = std::max(cond_err,
                            sup_diff(conditional_distribution(g, B, x, t_star, kWorkers),
                                     qd.sigma));
    if (cond_err > 1e-6) pass = false;

    // measured per-unit-time decay of the conditional distance vs lambda2/lambda1
    Site x0 = sites[n / 3];
    double d50 = sup_diff(conditional_distribution(g, B, x0, 50.0, kWorkers), qd.sigma);
    double d70 = sup_diff(conditional_distribution(g, B, x0, 70.0, kWorkers), qd.sigma);
    double rate = std::pow(d70 / d50, 1.0 / 20.0);
    double target = qd.lambda2 / qd.lambda1;
    if (std::fabs(rate / target - 1.0) > 0.1) pass = false;

    report(5, "quasistationary", pass,
           fmt("sigma err %.1e (1e-8); cond err %.1e (1e-6); decay %.4f vs %.4f", sig_err,
               cond_err, rate, target),
           sw.seconds());
}

void criterion_6_hitting_distribution() {
    Stopwatch sw;
    ExperimentConfig cfg;
    cfg.experiment = "hitting_dist_check";
    cfg.seed = kSeed + 6;
    cfg.workers = kWorkers;
    cfg.N_grid = {64};
    HittingDistReport r64 = hitting_dist_check(cfg, 4, 100000);
    cfg.N_grid = {32};
    HittingDistReport r32 = hitting_dist_check(cfg, 4, 100000);
    bool pass = r64.max_orbit_deviation <= 0.1 &&
                r64.max_orbit_deviation < r32.max_orbit_deviation;
    report(6, "hitting distribution", pass,
           fmt("max orbit deviation %.4f at N=64 (limit 0.1), %.4f at N=32",
               r64.max_orbit_deviation, r32.max_orbit_deviation),
           sw.seconds());
}

void criterion_7_excursions() {
    Stopwatch sw;
    ExperimentConfig cfg;
    cfg.experiment = "excursion_concentration";
    cfg.N_grid = {64};
    cfg.u_grid = {1.0};
    cfg.eps = 0.5;
    cfg.replicas = 100;
    cfg.seed = kSeed + 7;
    cfg.workers = kWorkers;
    RunResult r = excursion_concentration(cfg);
    double freq = r.aggregates.at(0).at(4);
    double mean_ratio = 0.0;
    for (const auto& row : r.rows) mean_ratio += row[3];
    mean_ratio /= static_cast<double>(r.rows.size());
    bool pass = freq >= 0.95;
    report(7, "excursion concentration", pass,
           fmt("ratio in [0.5, 2] for %.0f%% of 100 replicas (need 95%%), mean ratio %.3f",
               100.0 * freq, mean_ratio),
           sw.seconds());
}

void criterion_8_mixing() {
    Stopwatch sw;
    ExperimentConfig cfg;
    cfg.experiment = "mixing_check";
    cfg.N_grid = {6, 8, 10, 12};
    cfg.workers = kWorkers;
    RunResult r = mixing_check(cfg);
    bool pass = true;
    double tv8 = 1.0, prev = 0.0;
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        if (r.rows[i][0] == 8.0) tv8 = r.rows[i][2];
        if (i > 0 && r.rows[i][3] >= prev) pass = false;
        prev = r.rows[i][3];
    }
    if (tv8 >= 1e-6) pass = false;
    report(8, "mixing at t*", pass,
           fmt("tv(N=8) = %.2e (limit 1e-6), log-tv decreasing over {6,8,10,12}", tv8),
           sw.seconds());
}

void criterion_9_figure_regime() {
    Stopwatch sw;
    ExperimentConfig cfg;
    cfg.experiment = "phase_sweep";
    cfg.N_grid = {200};
    cfg.u_grid = {2.5, 3.5};
    cfg.replicas = 5;
    cfg.seed = kSeed + 9;
    cfg.workers = kWorkers;
    RunResult r = phase_sweep(cfg);
    double frac_lo = r.aggregates.at(0).at(2);
    double frac_hi = r.aggregates.at(1).at(2);
    double wraps_lo = r.aggregates.at(0).at(5);
    bool pass = frac_lo >= 5.0 * frac_hi && wraps_lo >= 4.0;
    report(9, "fragmentation regime", pass,
           fmt("mean frac %.4f (u=2.5) vs %.4f (u=3.5), factor %.1f (need 5); wraps %d/5 "
               "(need 4)",
               frac_lo, frac_hi, frac_hi > 0 ? frac_lo / frac_hi : 1e9,
               static_cast<int>(wraps_lo)),
           sw.seconds());
}

void criterion_10_coupling_sandwich() {
    Stopwatch sw;
    ExperimentConfig cfg;
    cfg.experiment = "coupling_sandwich";
    cfg.N_grid = {32, 64};
    cfg.u_grid = {1.0};
    cfg.eps = 0.3;
    cfg.replicas = 10000;
    cfg.seed = kSeed + 10;
    cfg.workers = kWorkers;
    RunResult r = coupling_sandwich(cfg);
    double v32 = r.aggregates.at(0).at(6);
    double v64 = r.aggregates.at(1).at(6);
    bool pass = v32 == 0.0 && v64 == 0.0 && v64 <= v32;
    report(10, "coupling sandwich", pass,
           fmt("p_hat %.4f (N=32), %.4f (N=64) in band [%.4f, %.4f]; violations %d/%d",
               r.aggregates.at(0).at(2), r.aggregates.at(1).at(2), r.aggregates.at(0).at(4),
               r.aggregates.at(0).at(5), static_cast<int>(v32), static_cast<int>(v64)),
           sw.seconds());
}

void criterion_11_uniqueness() {
    Stopwatch sw;
    TorusGeom g = TorusGeom::make(3, 30);
    std::uint64_t violations = 0, hyp_count = 0;
    for (int i = 0; i < 200; ++i) {
        double p = (i + 0.5) / 200.0;  // densities sweep the full range
        Rng rng = Rng::stream(kSeed + 11, static_cast<std::uint64_t>(i));
        DenseBitset occ(g.total);
        for (Site s = 0; s < g.total; ++s)
            if (rng.uniform() < p) occ.set(s);
        UniquenessReport rep = uniqueness_check(g, occ, 3, kWorkers);
        if (rep.hypotheses_hold) ++hyp_count;
        if (rep.hypotheses_hold && !rep.conclusion_holds) ++violations;
    }
    bool pass = violations == 0;
    report(11, "local uniqueness", pass,
           fmt("%llu violations on 200 masks (hypotheses held on %llu)",
               static_cast<unsigned long long>(violations),
               static_cast<unsigned long long>(hyp_count)),
           sw.seconds());
}

void criterion_12_determinism() {
    Stopwatch sw;
    bool pass = true;
    std::vector<std::string> mismatches;

    auto check_run = [&](const char* name, auto&& runner) {
        ExperimentConfig base;
        base.seed = kSeed + 12;
        base.workers = 1;
        RunResult one = runner(base);
        base.workers = 8;
        RunResult many = runner(base);
        if (one.csv() != many.csv() || one.summary_json() != many.summary_json()) {
            pass = false;
            mismatches.push_back(name);
        }
    };

    check_run("phase_sweep", [](ExperimentConfig c) {
        c.experiment = "phase_sweep";
        c.N_grid = {8};
        c.u_grid = {0.5, 1.5};
        c.replicas = 4;
        return phase_sweep(c);
    });
    check_run("coupling_sandwich", [](ExperimentConfig c) {
        c.experiment = "coupling_sandwich";
        c.N_grid = {8};
        c.u_grid = {1.0};
        c.eps = 0.3;
        c.replicas = 20;
        return coupling_sandwich(c);
    });
    check_run("excursion_concentration", [](ExperimentConfig c) {
        c.experiment = "excursion_concentration";
        c.N_grid = {16};
        c.u_grid = {1.0};
        c.eps = 0.75;
        c.replicas = 3;
        return excursion_concentration(c);
    });
    check_run("mixing_check", [](ExperimentConfig c) {
        c.experiment = "mixing_check";
        c.N_grid = {6, 8};
        return mixing_check(c);
    });
    check_run("hitting_dist_check", [](ExperimentConfig c) {
        c.experiment = "hitting_dist_check";
        c.N_grid = {16};
        return hitting_dist_check(c, 2, 300).result;
    });
    check_run("connectivity_decay", [](ExperimentConfig c) {
        c.experiment = "connectivity_decay";
        c.u_grid = {0.5, 1.5};
        c.replicas = 2;
        return connectivity_decay(c, {1});
    });
    check_run("strong_supercriticality", [](ExperimentConfig c) {
        c.experiment = "strong_supercriticality_probe";
        c.N_grid = {4};
        c.u_grid = {1.0};
        c.mu = 0.2;
        c.replicas = 2;
        return strong_supercriticality_probe(c);
    });

    // library-level runs used by the criteria above
    {
        InterlacementSampler sm(3, 1, 64, InterlacementSampler::EqMethod::Exact, 1, 10000, 1);
        VacancyEstimate a = sm.vacancy_prob({ZdPoint(3, 0)}, 1.0, 2000, kSeed, 1);
        VacancyEstimate b = sm.vacancy_prob({ZdPoint(3, 0)}, 1.0, 2000, kSeed, 8);
        if (a.p_hat != b.p_hat || a.vacant != b.vacant) {
            pass = false;
            mismatches.push_back("vacancy_prob");
        }

        std::vector<ZdPoint> ball = linf_ball_zd(ZdPoint(3, 0), 1, 3);
        EquilibriumMeasure e1 = equilibrium(ball, 3, 16, 32, 1e-10, 1);
        EquilibriumMeasure e8 = equilibrium(ball, 3, 16, 32, 1e-10, 8);
        if (e1.capacity != e8.capacity || e1.weights != e8.weights) {
            pass = false;
            mismatches.push_back("equilibrium");
        }

        CapacityMc m1 = capacity_mc(ball, 3, 64, 200, kSeed, 1);
        CapacityMc m8 = capacity_mc(ball, 3, 64, 200, kSeed, 8);
        if (m1.cap_hat != m8.cap_hat || m1.freqs != m8.freqs) {
            pass = false;
            mismatches.push_back("capacity_mc");
        }

        TorusGeom g = TorusGeom::make(3, 16);
        MeanHitting h1 = mean_hitting(g, linf_ball(0, 1, g), 500, kSeed, 1);
        MeanHitting h8 = mean_hitting(g, linf_ball(0, 1, g), 500, kSeed, 8);
        if (h1.h_bar != h8.h_bar) {
            pass = false;
            mismatches.push_back("mean_hitting");
        }

        TorusGeom g8 = TorusGeom::make(3, 8);
        SiteSet B = linf_ball(0, 2, g8);
        QuasiDist q1 = quasistationary(g8, B, 1e-13, 0, 1);
        QuasiDist q8 = quasistationary(g8, B, 1e-13, 0, 8);
        if (q1.sigma != q8.sigma || q1.lambda1 != q8.lambda1) {
            pass = false;
            mismatches.push_back("quasistationary");
        }

        TorusGeom g20 = TorusGeom::make(3, 20);
        Rng rng = Rng::stream(kSeed + 12, 99);
        DenseBitset occ(g20.total);
        for (Site s = 0; s < g20.total; ++s)
            if (rng.uniform() < 0.3) occ.set(s);
        UniquenessReport u1 = uniqueness_check(g20, occ, 2, 1);
        UniquenessReport u8 = uniqueness_check(g20, occ, 2, 8);
        if (u1.hypothesis1 != u8.hypothesis1 || u1.hypothesis2 != u8.hypothesis2 ||
            u1.conclusion_holds != u8.conclusion_holds) {
            pass = false;
            mismatches.push_back("uniqueness_check");
        }
    }

    std::string detail = "1 vs 8 workers byte-identical on all suites";
    if (!pass) {
        detail = "mismatch:";
        for (const auto& m : mismatches) detail += " " + m;
    }
    report(12, "determinism", pass, detail, sw.seconds());
}

}  // namespace

int main() {
    std::printf("acceptance run: seed %llu, %u workers requested\n",
                static_cast<unsigned long long>(kSeed), kWorkers);
    criterion_1_vacancy();
    criterion_2_capacity_golden();
    criterion_3_capacity_scaling();
    criterion_4_mean_hitting();
    criterion_5_quasistationary();
    criterion_6_hitting_distribution();
    criterion_7_excursions();
    criterion_8_mixing();
    criterion_9_figure_regime();
    criterion_10_coupling_sandwich();
    criterion_11_uniqueness();
    criterion_12_determinism();
    std::printf("%d of 12 criteria failed\n", g_failures);
    return g_failures;
}
