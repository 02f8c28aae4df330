#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tfrg/lattice.hpp"

namespace tfrg {

struct ExperimentConfig {
    std::string experiment;
    int d = 3;
    std::vector<std::int64_t> N_grid{32};
    std::vector<double> u_grid{1.0};
    double eps = 0.5;
    double delta = 0.5;
    double mu = 0.1;
    std::uint64_t replicas = 1;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::string out_dir;

    std::string canonical_json() const;  // sorted keys, fixed field set
    std::uint64_t hash() const;          // FNV-1a of canonical_json()
    static ExperimentConfig from_json_text(const std::string& text);
};

// Per-replica rows plus aggregate rows over the same columns. Aggregates are
// a pure function of the rows, kept re-runnable for idempotence checks.
struct RunResult {
    std::string experiment;
    std::string config_json;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> columns;
    std::vector<std::string> agg_columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::vector<double>> aggregates;
    std::vector<std::string> notes;
    double wall_seconds = 0.0;
    std::function<std::vector<std::vector<double>>(const RunResult&)> aggregator;

    std::vector<std::vector<double>> recompute_aggregates() const {
        return aggregator ? aggregator(*this) : std::vector<std::vector<double>>{};
    }
    std::string csv() const;           // replica rows + aggregate rows, flag column
    std::string summary_json() const;  // config echo, aggregates, notes
};

// Walk trace -> vacant components, over a u grid.
// columns: u, replica, frac_max, vol_sec, wraps_all_axes
RunResult phase_sweep(const ExperimentConfig& cfg);

// Window vacancy of the walk trace against the interlacement band
// [exp(-u(1+eps)cap(V)), exp(-u(1-eps)cap(V))], window V = B(0,1), per N.
// columns: N, replica, vacant
RunResult coupling_sandwich(const ExperimentConfig& cfg);

// Excursion counts K_u between A = B(0, N^(1-eps)) and B = B(0, N^(1-eps/2))
// against u cap(A). columns: u, replica, k_u, ratio
RunResult excursion_concentration(const ExperimentConfig& cfg);

// Exact worst-start total variation to uniform at t = (N ln N)^2 per N.
// columns: N, t_star, tv, log_tv (one row per N, aggregates empty)
RunResult mixing_check(const ExperimentConfig& cfg);

struct HittingDistReport {
    RunResult result;  // columns: orbit_index, hits, emp_freq, theory_freq, ratio
    double max_orbit_deviation = 0.0;
    std::uint64_t total_hits = 0;
};

// Entrance law into A = B(0, ball_r) started from the quasistationary law,
// compared orbit-by-orbit with the normalized equilibrium measure.
HittingDistReport hitting_dist_check(const ExperimentConfig& cfg, std::int64_t ball_r = 4,
                                     std::uint64_t hits = 100000);

// Vacancy connection proxies over (u, L) grids with L in {4, 8, 16} scaled
// boxes: eta-proxy P[0 <-> sphere radius L] and alpha-proxy
// P[B(0,L) <-> box boundary], plus a logistic crossover fit with bootstrap
// error bars (heuristic, labeled as such in notes).
// columns: u, L, replica, eta_event, alpha_event
RunResult connectivity_decay(const ExperimentConfig& cfg,
                             const std::vector<std::int64_t>& L_grid = {4, 8, 16});

// Frequencies of the two strong-supercriticality events at levels u(1 -+ mu)
// in coupled samples on B(0,2N), per N. columns: N, replica, touch, conn
RunResult strong_supercriticality_probe(const ExperimentConfig& cfg);

// shared helpers
double mean_of(const std::vector<double>& v);
double stderr_of(const std::vector<double>& v);

struct LogisticFit {
    double slope = 0.0;
    double crossover = 0.0;  // u where the fitted curve passes 1/2
    double crossover_stderr = 0.0;
    bool converged = false;
};

// Least-squares fit of p(u) = 1 / (1 + exp(slope (u - crossover))), with a
// bootstrap standard error for the crossover.
LogisticFit fit_logistic(const std::vector<double>& u, const std::vector<double>& p,
                         const std::vector<std::uint64_t>& n_per_point, std::uint64_t boot_seed,
                         int bootstrap = 200);

}  // namespace tfrg
