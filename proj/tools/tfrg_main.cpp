#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tfrg/components.hpp"
#include "tfrg/experiments.hpp"
#include "tfrg/interlace.hpp"
#include "tfrg/io.hpp"
#include "tfrg/potential.hpp"
#include "tfrg/quasistat.hpp"
#include "tfrg/rng.hpp"
#include "tfrg/walk.hpp"

namespace {

using nlohmann::json;
using namespace tfrg;

std::uint64_t memory_cap_bytes() {
    const char* env = std::getenv("TFRG_MEMORY_CAP_BYTES");
    if (env) return std::strtoull(env, nullptr, 10);
    return std::uint64_t{2} << 30;
}

void check_memory(int d, std::int64_t N) {
    double bytes = 4.0 * std::pow(static_cast<double>(N), d);
    if (bytes > static_cast<double>(memory_cap_bytes()))
        throw std::runtime_error("memory guard: 4*N^d bytes exceed TFRG_MEMORY_CAP_BYTES");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open output file " + path);
    os << text;
}

void persist(const RunResult& res, const std::string& out_dir) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(res.config_hash));
    std::string base = out_dir + "/" + res.experiment + "_" + hash_hex;
    write_text(base + ".csv", res.csv());
    write_text(base + ".json", res.summary_json() + "\n");
    std::cerr << "wrote " << base << ".csv and .json in " << res.wall_seconds << "s\n";
}

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return ExperimentConfig::from_json_text(text);
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    int dim = 0;
    std::vector<std::int64_t> sides;
    std::vector<double> levels;
    double eps = -1.0, delta = -1.0, mu = -1.0;
    std::int64_t replicas = -1;
    std::int64_t seed = -1;
    int workers = -1;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config file; flags override its values");
        app->add_option("--out", out_dir, "output directory for CSV/JSON artifacts");
        app->add_option("-d,--dim", dim, "lattice dimension");
        app->add_option("-N,--side", sides, "torus side length (repeatable for grids)");
        app->add_option("-u,--u", levels, "intensity level (repeatable for grids)");
        app->add_option("--eps", eps, "epsilon parameter");
        app->add_option("--delta", delta, "delta parameter");
        app->add_option("--mu", mu, "mu parameter (coupled level offset)");
        app->add_option("--replicas", replicas, "replica count");
        app->add_option("--seed", seed, "master seed");
        app->add_option("--workers", workers, "worker thread count");
    }

    ExperimentConfig resolve(const std::string& experiment) const {
        ExperimentConfig c = load_config(config_path);
        c.experiment = experiment;
        if (dim > 0) c.d = dim;
        if (!sides.empty()) c.N_grid = sides;
        if (!levels.empty()) c.u_grid = levels;
        if (eps >= 0.0) c.eps = eps;
        if (delta >= 0.0) c.delta = delta;
        if (mu >= 0.0) c.mu = mu;
        if (replicas >= 0) c.replicas = static_cast<std::uint64_t>(replicas);
        if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
        if (workers >= 0) c.workers = static_cast<unsigned>(workers);
        if (!out_dir.empty()) c.out_dir = out_dir;
        if (c.workers == 0) c.workers = 1;
        return c;
    }
};

json resolved_echo(const ExperimentConfig& c) { return json::parse(c.canonical_json()); }

int cmd_simulate(const ExperimentConfig& cfg, const std::string& voxel_path) {
    check_memory(cfg.d, cfg.N_grid.at(0));
    TorusGeom geom = TorusGeom::make(cfg.d, cfg.N_grid.at(0));
    double u = cfg.u_grid.at(0);
    WalkConfig wc;
    wc.geom = geom;
    wc.steps = static_cast<std::uint64_t>(u * static_cast<double>(geom.total));
    wc.seed = Rng::stream(cfg.seed, 0).next_u64();
    VisitedMask mask = walk_trace(wc);
    ComponentStats st = label_components(geom, mask.bits);

    json out;
    out["config"] = resolved_echo(cfg);
    out["visited"] = mask.visit_count;
    out["vacant"] = st.vacant_count;
    out["components"] = st.count();
    out["frac_max"] =
        st.count() ? static_cast<double>(st.volume(st.id_max())) / static_cast<double>(geom.total)
                   : 0.0;
    out["vol_sec"] = st.id_sec() ? st.volume(st.id_sec()) : 0;
    out["wraps_all_axes"] = st.max_wraps_all_axes;
    if (!voxel_path.empty()) {
        dump_voxels(st, voxel_path);
        out["voxel_file"] = voxel_path;
    }
    std::cout << out.dump(2) << "\n";
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_text(cfg.out_dir + "/simulate.json", out.dump(2) + "\n");
    }
    return 0;
}

int cmd_interlace(const ExperimentConfig& cfg, std::int64_t radius, std::int64_t r_kill) {
    InterlacementSampler sampler(cfg.d, radius, r_kill, InterlacementSampler::EqMethod::Auto,
                                 cfg.seed + 1, 200000, cfg.workers);
    InterlacementSample s = sampler.sample(cfg.u_grid.at(0), cfg.seed);
    TorusGeom grid = TorusGeom::make_grid(cfg.d, 2 * radius + 1);
    ComponentStats st = label_components(grid, s.trace, Adjacency::NN, GridMode::FreeBox);
    json out;
    out["config"] = resolved_echo(cfg);
    out["radius"] = radius;
    out["R_kill"] = sampler.R_kill();
    out["capacity"] = sampler.capacity();
    out["eq_method"] = sampler.method();
    out["J"] = s.J;
    out["trace_count"] = s.trace_count;
    out["vacant_components"] = st.count();
    out["largest_vacant"] = st.count() ? st.volume(st.id_max()) : 0;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_capacity(const ExperimentConfig& cfg, std::int64_t radius, std::uint64_t mc_n) {
    std::vector<ZdPoint> ball = linf_ball_zd(ZdPoint(cfg.d, 0), radius, cfg.d);
    EquilibriumMeasure eq = equilibrium(ball, cfg.d, 0, 0, 1e-10, cfg.workers);
    CapacityMc mc = capacity_mc(ball, cfg.d, std::max<std::int64_t>(64, 8 * radius), mc_n,
                                cfg.seed, cfg.workers);
    json out;
    out["config"] = resolved_echo(cfg);
    out["radius"] = radius;
    out["capacity"] = eq.capacity;
    out["extrapolation_error"] = eq.error;
    out["capacity_mc"] = mc.cap_hat;
    out["capacity_mc_stderr"] = mc.stderr_;
    out["agreement_sigma"] = mc.stderr_ > 0 ? std::fabs(mc.cap_hat - eq.capacity) / mc.stderr_
                                            : 0.0;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_quasistat(const ExperimentConfig& cfg, std::int64_t ball_r) {
    TorusGeom geom = TorusGeom::make(cfg.d, cfg.N_grid.at(0));
    SiteSet B = linf_ball(0, ball_r, geom);
    GapReport g = gap_check(geom, B, 1e-10, cfg.workers);
    json out;
    out["config"] = resolved_echo(cfg);
    out["ball_radius"] = ball_r;
    out["lambda1"] = g.lambda1;
    out["lambda2"] = g.lambda2;
    out["gap"] = g.gap;
    out["gap_times_N2"] = g.gap_scaled;
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_validate(const ExperimentConfig& cfg, const std::string& suite) {
    json out;
    out["config"] = resolved_echo(cfg);
    out["suite"] = suite;
    bool pass = false;
    if (suite == "vacancy") {
        InterlacementSampler sampler(cfg.d, 2, 0, InterlacementSampler::EqMethod::Auto,
                                     cfg.seed + 1, 200000, cfg.workers);
        std::vector<ZdPoint> V = linf_ball_zd(ZdPoint(cfg.d, 0), 1, cfg.d);
        pass = true;
        json checks = json::array();
        std::uint64_t stream = 0;
        for (double u : {0.5, 1.0, 2.0}) {
            VacancyEstimate est =
                sampler.vacancy_prob(V, u, cfg.replicas ? cfg.replicas : 100000,
                                     cfg.seed + 1000 + stream++, cfg.workers);
            bool ok = std::fabs(est.p_hat - est.p_theory) <= 3.0 * est.stderr_;
            pass = pass && ok;
            checks.push_back({{"u", u},
                              {"p_hat", est.p_hat},
                              {"p_theory", est.p_theory},
                              {"stderr", est.stderr_},
                              {"pass", ok}});
        }
        out["checks"] = checks;
    } else if (suite == "mixing") {
        ExperimentConfig mc = cfg;
        mc.N_grid = {6, 8, 10, 12};
        RunResult r = mixing_check(mc);
        pass = true;
        double prev = 0.0;
        for (std::size_t i = 0; i < r.rows.size(); ++i) {
            if (i > 0 && r.rows[i][3] >= prev) pass = false;
            prev = r.rows[i][3];
        }
        for (const auto& row : r.rows)
            if (row[0] == 8.0 && row[2] >= 1e-6) pass = false;
        out["rows"] = r.rows;
        persist(r, cfg.out_dir);
    } else {
        throw std::runtime_error("unknown validation suite: " + suite);
    }
    out["pass"] = pass;
    std::cout << out.dump(2) << "\n";
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_text(cfg.out_dir + "/validate_" + suite + ".json", out.dump(2) + "\n");
    }
    return pass ? 0 : 1;
}

int cmd_golden_regen(const ExperimentConfig& cfg, const std::string& path) {
    GoldenTable table;
    for (std::int64_t r : {0, 1, 2, 3, 4}) {
        std::vector<ZdPoint> set =
            r == 0 ? std::vector<ZdPoint>{ZdPoint(cfg.d, 0)}
                   : linf_ball_zd(ZdPoint(cfg.d, 0), r, cfg.d);
        EquilibriumMeasure eq = equilibrium(set, cfg.d, 0, 0, 1e-10, cfg.workers);
        GoldenEntry e;
        e.capacity = eq.capacity;
        e.method = eq.method;
        e.R1 = std::max<std::int64_t>(32, 8 * std::max<std::int64_t>(zd_diameter(set), 1));
        e.R2 = 2 * e.R1;
        table.set(r == 0 ? "d" + std::to_string(cfg.d) + "_point"
                         : GoldenTable::ball_key(cfg.d, r),
                  e);
    }
    table.save(path);
    std::cout << json{{"written", path}, {"entries", table.size()}}.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"torus fragmentation toolkit"};
    app.require_subcommand(1);

    CommonFlags sim_flags, inter_flags, cap_flags, quasi_flags, sweep_flags, val_flags,
        dump_flags, golden_flags;

    auto* sim = app.add_subcommand("simulate", "walk trace and vacant components");
    sim_flags.attach(sim);
    std::string sim_voxels;
    sim->add_option("--dump-voxels", sim_voxels, "write component labels as a voxel file");

    auto* inter = app.add_subcommand("interlace", "one interlacement sample in a box");
    inter_flags.attach(inter);
    std::int64_t inter_radius = 4, inter_rkill = 0;
    inter->add_option("-r,--radius", inter_radius, "box radius");
    inter->add_option("--r-kill", inter_rkill, "walk truncation radius (0 = max(8r,64))");

    auto* cap = app.add_subcommand("capacity", "ball capacity, exact vs Monte Carlo");
    cap_flags.attach(cap);
    std::int64_t cap_radius = 2;
    std::uint64_t cap_n = 2000;
    cap->add_option("-r,--radius", cap_radius, "ball radius");
    cap->add_option("-n,--samples", cap_n, "Monte Carlo samples per boundary point");

    auto* quasi = app.add_subcommand("quasistat", "quasistationary eigenpair and gap");
    quasi_flags.attach(quasi);
    std::int64_t quasi_r = 2;
    quasi->add_option("-r,--ball", quasi_r, "radius of the excluded ball B");

    auto* sweep = app.add_subcommand("sweep", "phase sweep over u");
    sweep_flags.attach(sweep);

    auto* val = app.add_subcommand("validate", "self-check suites");
    val_flags.attach(val);
    std::string suite = "vacancy";
    val->add_option("--suite", suite, "suite name: vacancy | mixing");

    auto* dump = app.add_subcommand("dump-voxels", "simulate and write a voxel file");
    dump_flags.attach(dump);
    std::string dump_path = "out.tfrg";
    dump->add_option("--file", dump_path, "voxel output path");

    auto* golden = app.add_subcommand("golden-regen", "recompute frozen capacity values");
    golden_flags.attach(golden);
    std::string golden_path = "data/golden_capacities.json";
    golden->add_option("--file", golden_path, "golden table path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_flags.resolve("simulate"), sim_voxels);
        if (inter->parsed())
            return cmd_interlace(inter_flags.resolve("interlace"), inter_radius, inter_rkill);
        if (cap->parsed()) return cmd_capacity(cap_flags.resolve("capacity"), cap_radius, cap_n);
        if (quasi->parsed()) return cmd_quasistat(quasi_flags.resolve("quasistat"), quasi_r);
        if (sweep->parsed()) {
            ExperimentConfig cfg = sweep_flags.resolve("phase_sweep");
            check_memory(cfg.d, cfg.N_grid.at(0));
            RunResult r = phase_sweep(cfg);
            persist(r, cfg.out_dir.empty() ? "." : cfg.out_dir);
            std::cout << r.summary_json() << "\n";
            return 0;
        }
        if (val->parsed()) return cmd_validate(val_flags.resolve("validate"), suite);
        if (dump->parsed()) return cmd_simulate(dump_flags.resolve("simulate"), dump_path);
        if (golden->parsed())
            return cmd_golden_regen(golden_flags.resolve("golden-regen"), golden_path);
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
