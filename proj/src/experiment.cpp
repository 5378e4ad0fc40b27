// SPDX-License-Identifier: Apache-2.0
//
// simbf - stacked intelligent metasurface beamforming for wideband MIMO-OFDM
// ------------------------------------------------------------------------

#include "simbf/experiment.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace simbf
{
    using json = nlohmann::ordered_json;

    namespace
    {
        constexpr const char *kKinds[] = {"fit_error_vs_bandwidth", "capacity_vs_subcarriers", "capacity_vs_layers",
                                          "capacity_vs_atoms",      "convergence_sweep",       "baseline_comparison"};

        // Walks one JSON object, recording type errors and unknown keys with their field path
        class Reader
        {
        public:
            Reader(const json *node, std::string path, std::vector<std::string> &diags)
                : node_(node), path_(std::move(path)), diags_(diags)
            {
                if (node_ && !node_->is_object())
                {
                    diags_.push_back(where() + ": expected an object");
                    node_ = nullptr;
                }
            }

            ~Reader()
            {
                if (!node_)
                    return;
                for (auto it = node_->begin(); it != node_->end(); ++it)
                    if (!seen_.count(it.key()))
                        diags_.push_back(field(it.key()) + ": unknown key");
            }

            std::string field(const std::string &key) const { return path_.empty() ? key : path_ + "." + key; }
            bool has(const std::string &key) const { return node_ && node_->contains(key); }

            Reader child(const std::string &key)
            {
                seen_.insert(key);
                return Reader(has(key) ? &node_->at(key) : nullptr, field(key), diags_);
            }

            void get(const std::string &key, double &out)
            {
                if (const json *v = fetch(key))
                {
                    if (v->is_number())
                        out = v->get<double>();
                    else
                        diags_.push_back(field(key) + ": expected a number");
                }
            }

            void get(const std::string &key, int &out)
            {
                if (const json *v = fetch(key))
                {
                    if (v->is_number_integer())
                        out = v->get<int>();
                    else
                        diags_.push_back(field(key) + ": expected an integer");
                }
            }

            void get(const std::string &key, std::uint64_t &out)
            {
                if (const json *v = fetch(key))
                {
                    if (v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0))
                        out = v->get<std::uint64_t>();
                    else
                        diags_.push_back(field(key) + ": expected a non-negative integer");
                }
            }

            void get(const std::string &key, bool &out)
            {
                if (const json *v = fetch(key))
                {
                    if (v->is_boolean())
                        out = v->get<bool>();
                    else
                        diags_.push_back(field(key) + ": expected true or false");
                }
            }

            void get(const std::string &key, std::string &out)
            {
                if (const json *v = fetch(key))
                {
                    if (v->is_string())
                        out = v->get<std::string>();
                    else
                        diags_.push_back(field(key) + ": expected a string");
                }
            }

            template <class T>
            void get(const std::string &key, std::vector<T> &out)
            {
                const json *v = fetch(key);
                if (!v)
                    return;
                if (!v->is_array())
                {
                    diags_.push_back(field(key) + ": expected an array");
                    return;
                }
                out.clear();
                for (std::size_t i = 0; i < v->size(); ++i)
                {
                    const json &e = (*v)[i];
                    const std::string at = field(key) + "[" + std::to_string(i) + "]";
                    if constexpr (std::is_same_v<T, int>)
                    {
                        if (!e.is_number_integer())
                        {
                            diags_.push_back(at + ": expected an integer");
                            continue;
                        }
                    }
                    else if (!e.is_number())
                    {
                        diags_.push_back(at + ": expected a number");
                        continue;
                    }
                    out.push_back(e.get<T>());
                }
            }

        private:
            const json *fetch(const std::string &key)
            {
                seen_.insert(key);
                return has(key) ? &node_->at(key) : nullptr;
            }

            std::string where() const { return path_.empty() ? "config" : path_; }

            const json *node_;
            std::string path_;
            std::vector<std::string> &diags_;
            std::set<std::string> seen_;
        };

        void read_stack(Reader r, StackConfig &s, double lambda)
        {
            r.get("num_layers", s.num_layers);
            r.get("atoms_x", s.atoms_x);
            r.get("atoms_z", s.atoms_z);
            r.get("num_antennas", s.num_antennas);
            r.get("thickness_m", s.total_thickness);
            s.atom_spacing = 0.5 * lambda;
            s.atom_area = 0.25 * lambda * lambda;
            s.antenna_spacing = 0.5 * lambda;
            r.get("atom_spacing_m", s.atom_spacing);
            r.get("atom_area_m2", s.atom_area);
            r.get("antenna_spacing_m", s.antenna_spacing);
        }

        void read_solver(Reader r, SolverSettings &s)
        {
            r.get("max_outer", s.max_outer);
            r.get("max_inner_tx", s.max_inner_tx);
            r.get("max_inner_rx", s.max_inner_rx);
            r.get("rho_init", s.rho_init);
            r.get("varrho_init", s.varrho_init);
            r.get("rho_max", s.rho_max);
            r.get("varrho_max", s.varrho_max);
            r.get("mu", s.mu);
            r.get("eps_objective", s.eps_objective);
            r.get("eps_iterate", s.eps_iterate);
            r.get("eps_slack", s.eps_slack);
            r.get("nu", s.nu);
            r.get("restart_budget", s.restart_budget);
            r.get("subproblem_tol", s.subproblem_tol);
            r.get("subproblem_max_iterations", s.subproblem_max_iterations);
        }

        template <class T, class Pred>
        void check_grid(const std::vector<T> &grid, const std::string &path, Pred ok, const char *msg,
                        std::vector<std::string> &diags)
        {
            if (grid.empty())
                diags.push_back(path + ": grid must not be empty");
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (!ok(grid[i]))
                    diags.push_back(path + "[" + std::to_string(i) + "]: " + msg);
        }

        // Parses into 'cfg' and returns every diagnostic
        std::vector<std::string> parse_into(const json &doc, ExperimentConfig &cfg)
        {
            std::vector<std::string> diags;
            if (!doc.is_object())
                return {"config: expected a JSON object at the top level"};
            {
                Reader root(&doc, "", diags);
                std::string kind;
                root.get("experiment", kind);
                if (!doc.contains("experiment"))
                    diags.push_back("experiment: missing (one of fit_error_vs_bandwidth, capacity_vs_subcarriers, "
                                    "capacity_vs_layers, capacity_vs_atoms, convergence_sweep, baseline_comparison)");
                else if (auto k = parse_experiment_kind(kind))
                    cfg.kind = *k;
                else if (doc.at("experiment").is_string())
                    diags.push_back("experiment: unknown kind '" + kind + "'");
                root.get("master_seed", cfg.master_seed);
                root.get("trials", cfg.trials);
                root.get("workers", cfg.workers);
                root.get("output_dir", cfg.output_dir);

                {
                    Reader sys = root.child("system");
                    sys.get("center_frequency_hz", cfg.system.center_frequency);
                    cfg.band.center_frequency = cfg.system.center_frequency;
                    const double lambda = cfg.system.center_frequency > 0.0 ? wavelength(cfg.system.center_frequency) : 0.0;
                    sys.get("bandwidth_hz", cfg.band.bandwidth);
                    sys.get("num_subcarriers", cfg.band.num_subcarriers);
                    sys.get("link_distance_m", cfg.system.link_distance);
                    sys.get("num_scatterers", cfg.system.num_scatterers);
                    sys.get("timing_sync", cfg.system.timing_sync);
                    sys.get("antenna_gain_dbi", cfg.system.antenna_gain_dbi);
                    sys.get("system_loss_db", cfg.system.system_loss_db);
                    double tx_dbm = 20.0, noise_dbm = -110.0;
                    sys.get("tx_power_dbm", tx_dbm);
                    sys.get("noise_power_dbm", noise_dbm);
                    cfg.link = LinkBudget::from_db(tx_dbm, noise_dbm, cfg.system.antenna_gain_dbi, cfg.system.system_loss_db);
                    {
                        Reader vol = sys.child("scatterer_volume");
                        vol.get("near_fraction", cfg.system.volume.near_fraction);
                        vol.get("far_fraction", cfg.system.volume.far_fraction);
                        vol.get("half_width_m", cfg.system.volume.half_width);
                    }
                    cfg.system.tx = default_stack(3, 4, 4, 2, cfg.system.center_frequency);
                    cfg.system.rx = cfg.system.tx;
                    read_stack(sys.child("tx"), cfg.system.tx, lambda);
                    read_stack(sys.child("rx"), cfg.system.rx, lambda);
                }
                read_solver(root.child("solver"), cfg.solver);
                {
                    Reader m = root.child("metrics");
                    std::string signal = "target", norm = "per_subcarrier";
                    m.get("signal_gain", signal);
                    m.get("omega_normalization", norm);
                    if (signal == "target")
                        cfg.signal = SignalGain::target;
                    else if (signal == "achieved")
                        cfg.signal = SignalGain::achieved;
                    else
                        diags.push_back("metrics.signal_gain: must be 'target' or 'achieved'");
                    if (norm == "per_subcarrier")
                        cfg.normalization = OmegaNormalization::per_subcarrier;
                    else if (norm == "last_subcarrier")
                        cfg.normalization = OmegaNormalization::last_subcarrier;
                    else
                        diags.push_back("metrics.omega_normalization: must be 'per_subcarrier' or 'last_subcarrier'");
                }
                {
                    Reader g = root.child("grid");
                    g.get("bandwidths_hz", cfg.bandwidths);
                    g.get("subcarriers", cfg.subcarriers);
                    g.get("layers", cfg.layers);
                    g.get("atoms_per_side", cfg.atoms_per_side);
                    g.get("penalties", cfg.penalties);
                    g.get("mus", cfg.mus);
                }
                if (root.has("bisection"))
                {
                    BisectionConfig b;
                    Reader r = root.child("bisection");
                    r.get("threshold", b.threshold);
                    r.get("low_hz", b.low);
                    r.get("high_hz", b.high);
                    r.get("tolerance_hz", b.tolerance);
                    r.get("warm_start", b.warm_start);
                    cfg.bisection = b;
                }
            }

            // Semantic checks
            for (auto &d : cfg.system.validate("system."))
                diags.push_back(std::move(d));
            for (auto &d : cfg.solver.validate("solver."))
                diags.push_back(std::move(d));
            for (auto &d : cfg.link.validate("system."))
                diags.push_back(std::move(d));
            if (cfg.band.num_subcarriers < 1)
                diags.push_back("system.num_subcarriers: must be at least 1");
            if (!(cfg.band.bandwidth > 0.0))
                diags.push_back("system.bandwidth_hz: must be positive");
            else if (!(cfg.band.center_frequency - 0.5 * cfg.band.bandwidth > 0.0))
                diags.push_back("system.bandwidth_hz: band must lie at positive frequencies");
            if (cfg.trials < 1)
                diags.push_back("trials: must be at least 1");
            if (cfg.workers < 1)
                diags.push_back("workers: must be at least 1");
            if (cfg.output_dir.empty())
                diags.push_back("output_dir: must not be empty");

            const double f0 = cfg.system.center_frequency;
            switch (cfg.kind)
            {
            case ExperimentKind::fit_error_vs_bandwidth:
                check_grid(cfg.bandwidths, "grid.bandwidths_hz", [&](double b) { return b > 0.0 && f0 - 0.5 * b > 0.0; },
                           "must be positive and below twice the center frequency", diags);
                break;
            case ExperimentKind::capacity_vs_subcarriers:
                check_grid(cfg.subcarriers, "grid.subcarriers", [](int n) { return n >= 1; }, "N_e must be at least 1", diags);
                break;
            case ExperimentKind::capacity_vs_layers:
                check_grid(cfg.layers, "grid.layers", [](int n) { return n >= 1; }, "must be at least 1", diags);
                break;
            case ExperimentKind::capacity_vs_atoms:
                check_grid(cfg.atoms_per_side, "grid.atoms_per_side",
                           [&](int n) { return n >= 1 && n * n >= cfg.system.tx.num_antennas; },
                           "must be at least 1 with n^2 >= num_antennas", diags);
                break;
            case ExperimentKind::convergence_sweep:
                if (cfg.penalties.empty())
                    cfg.penalties = {cfg.solver.rho_init};
                if (cfg.mus.empty())
                    cfg.mus = {cfg.solver.mu};
                check_grid(cfg.penalties, "grid.penalties", [&](double p) { return p >= 0.0 && p <= cfg.solver.rho_max; },
                           "must lie in [0, rho_max]", diags);
                check_grid(cfg.mus, "grid.mus", [](double m) { return m > 1.0; }, "mu must exceed 1", diags);
                break;
            case ExperimentKind::baseline_comparison:
                break;
            }
            if (cfg.bisection)
            {
                const auto &b = *cfg.bisection;
                if (cfg.kind != ExperimentKind::fit_error_vs_bandwidth)
                    diags.push_back("bisection: only valid for fit_error_vs_bandwidth");
                if (!(b.threshold > 0.0))
                    diags.push_back("bisection.threshold: must be positive");
                if (!(b.low > 0.0))
                    diags.push_back("bisection.low_hz: must be positive");
                if (!(b.high > b.low))
                    diags.push_back("bisection.high_hz: must exceed low_hz");
                else if (!(f0 - 0.5 * b.high > 0.0))
                    diags.push_back("bisection.high_hz: band must lie at positive frequencies");
                if (!(b.tolerance > 0.0))
                    diags.push_back("bisection.tolerance_hz: must be positive");
            }
            return diags;
        }

        std::string fmt(double v)
        {
            if (!std::isfinite(v))
                return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        std::string csv_escape(const std::string &s)
        {
            if (s.find_first_of(",\"\n") == std::string::npos)
                return s;
            std::string out = "\"";
            for (char c : s)
            {
                if (c == '"')
                    out += '"';
                out += c;
            }
            return out + "\"";
        }

        // One grid point: a label plus the configuration it induces
        struct Point
        {
            std::string param;
            std::string value;
            SystemConfig system;
            BandSpec band;
            SolverSettings solver;
        };

        std::vector<Point> expand_grid(const ExperimentConfig &cfg)
        {
            std::vector<Point> pts;
            auto base = [&](std::string param, std::string value)
            {
                return Point{std::move(param), std::move(value), cfg.system, cfg.band, cfg.solver};
            };
            switch (cfg.kind)
            {
            case ExperimentKind::fit_error_vs_bandwidth:
                for (double b : cfg.bandwidths)
                {
                    Point p = base("bandwidth_hz", fmt(b));
                    p.band.bandwidth = b;
                    pts.push_back(p);
                }
                break;
            case ExperimentKind::capacity_vs_subcarriers:
                for (int n : cfg.subcarriers)
                {
                    Point p = base("num_subcarriers", std::to_string(n));
                    p.band.num_subcarriers = n;
                    pts.push_back(p);
                }
                break;
            case ExperimentKind::capacity_vs_layers:
                for (int n : cfg.layers)
                {
                    Point p = base("layers", std::to_string(n));
                    p.system.tx.num_layers = p.system.rx.num_layers = n;
                    pts.push_back(p);
                }
                break;
            case ExperimentKind::capacity_vs_atoms:
                for (int n : cfg.atoms_per_side)
                {
                    Point p = base("atoms_per_side", std::to_string(n));
                    p.system.tx.atoms_x = p.system.tx.atoms_z = n;
                    p.system.rx.atoms_x = p.system.rx.atoms_z = n;
                    pts.push_back(p);
                }
                break;
            case ExperimentKind::convergence_sweep:
                for (double rho : cfg.penalties)
                    for (double mu : cfg.mus)
                    {
                        Point p = base("penalty/mu", fmt(rho) + "/" + fmt(mu));
                        p.solver.rho_init = p.solver.varrho_init = rho;
                        p.solver.mu = mu;
                        pts.push_back(p);
                    }
                break;
            case ExperimentKind::baseline_comparison:
                pts.push_back(base("none", ""));
                break;
            }
            return pts;
        }

        std::vector<std::string> schemes_for(ExperimentKind kind)
        {
            switch (kind)
            {
            case ExperimentKind::capacity_vs_layers:
            case ExperimentKind::capacity_vs_atoms:
                return {"sim_mc", "sim_sc"};
            case ExperimentKind::baseline_comparison:
                return {"sim_mc", "sim_sc", "single_layer"};
            default:
                return {"sim_mc"};
            }
        }

        struct JobResult
        {
            bool ok = false;
            std::string error;
            OptimizedRun run;
            std::optional<BisectionResult> bisection;
            std::string bisection_error;
        };

        struct Job
        {
            int point = 0;
            int scheme = 0;
            int trial = 0;
            std::uint64_t seed = 0;
        };

        std::string now_utc()
        {
            const std::time_t t = std::time(nullptr);
            char buf[32];
            std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
            return buf;
        }
    }

    const char *to_string(ExperimentKind kind)
    {
        return kKinds[int(kind)];
    }

    std::optional<ExperimentKind> parse_experiment_kind(const std::string &name)
    {
        for (int k = 0; k < int(std::size(kKinds)); ++k)
            if (name == kKinds[k])
                return ExperimentKind(k);
        return std::nullopt;
    }

    static std::string join_diagnostics(const std::vector<std::string> &diags)
    {
        std::string msg = "invalid config";
        for (const auto &d : diags)
            msg += "\n  " + d;
        return msg;
    }

    ConfigError::ConfigError(std::vector<std::string> diags)
        : std::runtime_error(join_diagnostics(diags)), diagnostics(std::move(diags))
    {
    }

    std::vector<std::string> validate_config(const json &doc)
    {
        ExperimentConfig cfg;
        return parse_into(doc, cfg);
    }

    ExperimentConfig parse_config(const json &doc)
    {
        ExperimentConfig cfg;
        auto diags = parse_into(doc, cfg);
        if (!diags.empty())
            throw ConfigError(std::move(diags));
        cfg.source = doc;
        return cfg;
    }

    json read_config_file(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError({path.string() + ": cannot read file"});
        try
        {
            return json::parse(in);
        }
        catch (const json::parse_error &e)
        {
            throw ConfigError({path.string() + ": " + e.what()});
        }
    }

    std::vector<SeedRow> experiment_seeds(const ExperimentConfig &config)
    {
        std::vector<SeedRow> out;
        for (int t = 0; t < config.trials; ++t)
        {
            const std::uint64_t s = derive_seed(config.master_seed, std::uint64_t(t));
            out.push_back({t, s, trial_seeds(s)});
        }
        return out;
    }

    RunSummary run_experiment(ExperimentConfig cfg, const RunOptions &options)
    {
        if (options.trials)
            cfg.trials = *options.trials;
        if (options.workers)
            cfg.workers = *options.workers;
        if (cfg.trials < 1)
            throw ConfigError({"trials: must be at least 1"});
        if (cfg.workers < 1)
            throw ConfigError({"workers: must be at least 1"});

        namespace fs = std::filesystem;
        RunSummary summary;
        summary.output_dir = options.output_dir ? *options.output_dir : fs::path(cfg.output_dir);
        const fs::path dir = summary.output_dir;
        if (fs::exists(dir / "manifest.json") && !options.overwrite)
            throw OutputExists("output directory " + dir.string() + " already holds results (use --overwrite)");
        fs::create_directories(dir);
        for (const char *name : {"subcarriers.csv", "summary.csv", "manifest.json", "convergence.jsonl", "probes.csv"})
            fs::remove(dir / name);

        const auto t_start = std::chrono::steady_clock::now();
        const std::string started = now_utc();
        const auto points = expand_grid(cfg);
        const auto schemes = schemes_for(cfg.kind);
        const auto seeds = experiment_seeds(cfg);
        const int S = cfg.system.num_streams();

        std::vector<Job> jobs;
        for (int p = 0; p < int(points.size()); ++p)
            for (int s = 0; s < int(schemes.size()); ++s)
                for (const auto &row : seeds)
                    jobs.push_back({p, s, row.trial, row.seed});
        summary.jobs = int(jobs.size());

        auto write_manifest = [&](const std::string &status, const std::string &error)
        {
            json m;
            m["status"] = status;
            if (!error.empty())
                m["error"] = error;
            m["experiment"] = to_string(cfg.kind);
            m["master_seed"] = cfg.master_seed;
            m["trials"] = cfg.trials;
            m["workers"] = cfg.workers;
            m["jobs"] = summary.jobs;
            m["failed_jobs"] = summary.failed_jobs;
            m["files"] = summary.files;
            m["versions"] = {{"simbf", "0.1.0"},
                             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                           "." + std::to_string(EIGEN_MINOR_VERSION)},
                             {"compiler", __VERSION__},
                             {"cxx_standard", long(__cplusplus)}};
            m["started_utc"] = started;
            m["wall_clock_s"] = summary.wall_clock_s;
            m["config"] = cfg.source;
            std::ofstream os(dir / "manifest.json");
            os << m.dump(2) << '\n';
        };

        try
        {
            std::vector<JobResult> results(jobs.size());
            parallel_for(int(jobs.size()), cfg.workers, [&](int j)
                         {
                             const Job &job = jobs[j];
                             const Point &pt = points[job.point];
                             const std::string &scheme = schemes[job.scheme];
                             const TrialSeeds ts = trial_seeds(job.seed);
                             JobResult &res = results[j];
                             try
                             {
                                 SystemConfig sys_cfg = pt.system;
                                 if (scheme == "single_layer")
                                     std::tie(sys_cfg.tx, sys_cfg.rx) = build_single_layer_baseline(sys_cfg.tx, sys_cfg.rx);
                                 const SimSystem sys = build_system(sys_cfg, pt.band, ts.channel);
                                 res.run = scheme == "sim_sc"
                                               ? run_baseline_single_carrier(sys, pt.solver, cfg.link, ts.fit, cfg.signal)
                                               : run_multi_carrier(sys, pt.solver, cfg.link, ts.fit, cfg.signal);
                                 res.run.fit.omega = omega(res.run.fit.state, sys.contexts, cfg.normalization);
                                 res.run.report.seed = job.seed;
                                 res.ok = true;
                                 if (cfg.bisection && job.point == 0)
                                 {
                                     const auto &b = *cfg.bisection;
                                     BisectionSettings bs{b.threshold, b.low, b.high, b.tolerance, ts.fit};
                                     try
                                     {
                                         res.bisection = bisect_effective_bandwidth(
                                             bs, optimizer_probe(sys, pt.band.num_subcarriers, pt.solver, cfg.normalization,
                                                                 b.warm_start));
                                     }
                                     catch (const std::exception &e)
                                     {
                                         res.bisection_error = e.what();
                                     }
                                 }
                             }
                             catch (const std::exception &e)
                             {
                                 res.ok = false;
                                 res.error = e.what();
                             } });

            for (const auto &r : results)
                summary.failed_jobs += r.ok ? 0 : 1;

            // Per-subcarrier rows
            {
                std::ofstream os(dir / "subcarriers.csv");
                os << "point,param,param_value,scheme,trial,seed,subcarrier,frequency_hz,nmse,eta_bps_hz";
                for (int s = 1; s <= S; ++s)
                    os << ",power_w_" << s;
                os << '\n';
                for (std::size_t j = 0; j < jobs.size(); ++j)
                {
                    if (!results[j].ok)
                        continue;
                    const Job &job = jobs[j];
                    const auto &rep = results[j].run.report;
                    for (std::size_t i = 0; i < rep.frequencies.size(); ++i)
                    {
                        os << job.point << ',' << points[job.point].param << ',' << points[job.point].value << ','
                           << schemes[job.scheme] << ',' << job.trial << ',' << job.seed << ',' << i + 1 << ','
                           << fmt(rep.frequencies[i]) << ',' << fmt(rep.nmse[i]) << ',' << fmt(rep.eta[i]);
                        for (double p : rep.powers[i])
                            os << ',' << fmt(p);
                        os << '\n';
                    }
                }
                summary.files.push_back("subcarriers.csv");
            }

            // Per-trial and aggregate rows
            {
                std::ofstream os(dir / "summary.csv");
                os << "record,point,param,param_value,scheme,trial,seed,ok,nmse_sum,omega,capacity_bps,nmse_std,"
                      "capacity_std,trials_ok,trials_failed,win_rate,sweeps,reason,error\n";
                std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
                for (std::size_t j = 0; j < jobs.size(); ++j)
                    groups[{jobs[j].point, jobs[j].scheme}].push_back(j);

                for (const auto &[key, idx] : groups)
                {
                    const auto [p, s] = key;
                    const Point &pt = points[p];
                    std::vector<TrialOutcome> outcomes;
                    double omega_sum = 0.0;
                    for (std::size_t j : idx)
                    {
                        const JobResult &r = results[j];
                        const auto &fit = r.run.fit;
                        os << "trial," << p << ',' << pt.param << ',' << pt.value << ',' << schemes[s] << ','
                           << jobs[j].trial << ',' << jobs[j].seed << ',' << int(r.ok) << ',';
                        if (r.ok)
                            os << fmt(r.run.report.nmse_sum) << ',' << fmt(fit.omega) << ',' << fmt(r.run.report.capacity)
                               << ",,,,,," << fit.report.sweeps << ',' << to_string(fit.report.reason) << ",\n";
                        else
                            os << ",,,,,,,,,," << csv_escape(r.error) << '\n';
                        TrialOutcome o;
                        o.ok = r.ok;
                        o.nmse = r.run.report.nmse_sum;
                        o.capacity = r.run.report.capacity;
                        outcomes.push_back(o);
                        if (r.ok)
                            omega_sum += fit.omega;
                    }
                    const MonteCarloSummary agg = aggregate(outcomes);
                    const int ok = agg.trials - agg.failed;

                    std::string win;
                    if (schemes[s] != "sim_mc")
                    {
                        // Paired against sim_mc on the same trial seeds
                        const auto &ref = groups.at({p, 0});
                        int wins = 0, pairs = 0;
                        for (std::size_t t = 0; t < idx.size(); ++t)
                        {
                            const JobResult &a = results[ref[t]], &b = results[idx[t]];
                            if (!a.ok || !b.ok)
                                continue;
                            ++pairs;
                            wins += a.run.report.capacity > b.run.report.capacity ? 1 : 0;
                        }
                        if (pairs > 0)
                            win = fmt(double(wins) / pairs);
                    }
                    os << "aggregate," << p << ',' << pt.param << ',' << pt.value << ',' << schemes[s] << ",,"
                       << cfg.master_seed << ',' << int(ok > 0) << ',' << fmt(agg.nmse_mean) << ','
                       << (ok > 0 ? fmt(omega_sum / ok) : std::string()) << ',' << fmt(agg.capacity_mean) << ','
                       << fmt(agg.nmse_std) << ',' << fmt(agg.capacity_std) << ',' << ok << ',' << agg.failed << ','
                       << win << ",,,\n";
                }
                summary.files.push_back("summary.csv");
            }

            if (cfg.kind == ExperimentKind::convergence_sweep)
            {
                std::ofstream os(dir / "convergence.jsonl");
                for (std::size_t j = 0; j < jobs.size(); ++j)
                {
                    if (!results[j].ok)
                        continue;
                    const Job &job = jobs[j];
                    std::ostringstream body;
                    results[j].run.fit.report.write_jsonl(body);
                    std::istringstream lines(body.str());
                    for (std::string line; std::getline(lines, line);)
                    {
                        json rec;
                        rec["point"] = job.point;
                        rec["param_value"] = points[job.point].value;
                        rec["trial"] = job.trial;
                        rec["seed"] = job.seed;
                        const json entry = json::parse(line);
                        for (const auto &[k, v] : entry.items())
                            rec[k] = v;
                        os << rec.dump() << '\n';
                    }
                }
                summary.files.push_back("convergence.jsonl");
            }

            if (cfg.bisection)
            {
                std::ofstream os(dir / "probes.csv");
                os << "trial,seed,index,kind,bandwidth_hz,omega,converged,passed,probe_seed,error\n";
                for (std::size_t j = 0; j < jobs.size(); ++j)
                {
                    const Job &job = jobs[j];
                    if (job.point != 0 || !results[j].ok)
                        continue;
                    const JobResult &r = results[j];
                    if (r.bisection)
                    {
                        for (const auto &pr : r.bisection->probes)
                            os << job.trial << ',' << job.seed << ',' << pr.index << ','
                               << (pr.endpoint ? "endpoint" : "midpoint") << ',' << fmt(pr.bandwidth) << ','
                               << fmt(pr.omega) << ',' << int(pr.converged) << ',' << int(pr.passed) << ',' << pr.seed
                               << ",\n";
                        os << job.trial << ',' << job.seed << ",,result," << fmt(r.bisection->effective_bandwidth)
                           << ",,,,,\n";
                    }
                    else
                        os << job.trial << ',' << job.seed << ",,result,,,,,," << csv_escape(r.bisection_error) << '\n';
                }
                summary.files.push_back("probes.csv");
            }
        }
        catch (const std::exception &e)
        {
            summary.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
            summary.files.push_back("manifest.json");
            write_manifest("failed", e.what());
            throw;
        }

        summary.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        summary.files.push_back("manifest.json");
        write_manifest(summary.failed_jobs == summary.jobs ? "failed" : "completed", "");
        return summary;
    }
}
