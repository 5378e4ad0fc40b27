// SPDX-License-Identifier: Apache-2.0

#include "simbf/experiment.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using nlohmann::ordered_json;

namespace
{
    // Configs cross the boundary as JSON text; the Python wrapper handles dicts
    ordered_json parse_text(const std::string &text)
    {
        try
        {
            return ordered_json::parse(text);
        }
        catch (const ordered_json::parse_error &e)
        {
            throw simbf::ConfigError({std::string("config: ") + e.what()});
        }
    }

    py::dict fit_trial(const std::string &config_text, int trial)
    {
        const auto cfg = simbf::parse_config(parse_text(config_text));
        if (trial < 0 || trial >= cfg.trials)
            throw py::index_error("trial out of range");
        const auto seeds = simbf::trial_seeds(simbf::derive_seed(cfg.master_seed, std::uint64_t(trial)));
        simbf::OptimizedRun run;
        {
            py::gil_scoped_release release;
            const auto sys = simbf::build_system(cfg.system, cfg.band, seeds.channel);
            run = simbf::run_multi_carrier(sys, cfg.solver, cfg.link, seeds.fit, cfg.signal);
        }
        py::dict out;
        out["omega"] = run.fit.omega;
        out["alpha"] = run.fit.state.alpha;
        out["capacity_bps"] = run.report.capacity;
        out["nmse"] = run.report.nmse;
        out["eta"] = run.report.eta;
        out["gamma"] = run.fit.report.gamma;
        out["sweeps"] = run.fit.report.sweeps;
        out["reason"] = simbf::to_string(run.fit.report.reason);
        out["theta"] = run.fit.state.theta;
        out["zeta"] = run.fit.state.zeta;
        return out;
    }
}

PYBIND11_MODULE(_core, m)
{
    py::register_exception<simbf::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<simbf::OutputExists>(m, "OutputExists", PyExc_FileExistsError);

    m.def("derive_seed", &simbf::derive_seed, py::arg("seed"), py::arg("index"));
    m.def("trial_seeds", [](std::uint64_t seed) {
        const auto s = simbf::trial_seeds(seed);
        return py::make_tuple(s.channel, s.fit);
    }, py::arg("trial_seed"));

    m.def("waterfill", [](const std::vector<double> &gains, double sigma2, double total_power) {
        const auto r = simbf::waterfill(gains, sigma2, total_power);
        return py::make_tuple(r.powers, r.level);
    }, py::arg("gains"), py::arg("sigma2"), py::arg("total_power"));

    m.def("spectral_efficiency", [](const simbf::CMat &H, const simbf::RVec &target, const simbf::RVec &powers,
                                    double alpha, double sigma2, bool achieved) {
        return simbf::spectral_efficiency(H, target, powers, alpha, sigma2,
                                          achieved ? simbf::SignalGain::achieved : simbf::SignalGain::target);
    }, py::arg("H"), py::arg("target"), py::arg("powers"), py::arg("alpha"), py::arg("sigma2"),
          py::arg("achieved") = false);

    m.def("capacity", [](const std::vector<double> &eta, double spacing) { return simbf::capacity(eta, spacing); },
          py::arg("eta"), py::arg("spacing"));

    m.def("validate_config", [](const std::string &text) {
        try
        {
            return simbf::validate_config(ordered_json::parse(text));
        }
        catch (const ordered_json::parse_error &e)
        {
            return std::vector<std::string>{std::string("config: ") + e.what()};
        }
    }, py::arg("config_json"));

    m.def("run_experiment", [](const std::string &text, std::optional<std::filesystem::path> output_dir,
                               std::optional<int> workers, std::optional<int> trials, bool overwrite) {
        simbf::RunOptions opt;
        opt.output_dir = std::move(output_dir);
        opt.workers = workers;
        opt.trials = trials;
        opt.overwrite = overwrite;
        auto cfg = simbf::parse_config(parse_text(text));
        simbf::RunSummary s;
        {
            py::gil_scoped_release release;
            s = simbf::run_experiment(std::move(cfg), opt);
        }
        py::dict out;
        out["output_dir"] = s.output_dir;
        out["files"] = s.files;
        out["jobs"] = s.jobs;
        out["failed_jobs"] = s.failed_jobs;
        out["wall_clock_s"] = s.wall_clock_s;
        return out;
    }, py::arg("config_json"), py::arg("output_dir") = py::none(), py::arg("workers") = py::none(),
          py::arg("trials") = py::none(), py::arg("overwrite") = false);

    m.def("fit_trial", &fit_trial, py::arg("config_json"), py::arg("trial") = 0,
          "Multi-carrier fit and capacity of one trial of a config");
}
