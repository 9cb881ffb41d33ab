// Copyright 2026 The qpu-twin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "qtwin/error.hpp"
#include "qtwin/parallel.hpp"

namespace {

using namespace qpu_twin;
using qtwin::ErrorKind;

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config:
        case ErrorKind::InvalidArgument:
        case ErrorKind::EmptyGrid:
        case ErrorKind::SampleRateMismatch:
        case ErrorKind::ModelMismatch:
            return kInput;
        default:
            return kNumerical;
    }
}

std::size_t thread_count(int flag) {
    if (flag > 0) {
        return static_cast<std::size_t>(flag);
    }
    if (const char* env = std::getenv("QPU_TWIN_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) {
            return static_cast<std::size_t>(n);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qpu_twin: simulated characterization runs for flux-tunable transmon devices"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config, out = "out", format = "csv";
    std::uint64_t seed = 1;
    int threads = 0;
    bool stamp = false;
    app.add_option("--config", config, "device description (YAML or JSON)")->required();
    app.add_option("--out", out, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads (default: QPU_TWIN_THREADS, then all cores)");
    app.add_flag("--stamp", stamp, "embed a timestamp in SVG outputs");
    app.add_option("--format", format, "tabular output format")->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    auto* fit = app.add_subcommand("fit-device", "fit chain parameters to each qubit's spectral lines");

    ReadoutArgs ro;
    auto* readout = app.add_subcommand("readout", "feedline spectrum, single shots, assignment matrix");
    readout->add_option("action", ro.sub)->required()->check(CLI::IsMember({"spectrum", "shots", "matrix"}));
    readout->add_option("--qubit", ro.qubit)->required();
    readout->add_option("--shots", ro.shots, "shots per prepared state");
    readout->add_option("--amplitude", ro.amplitude, "drive amplitude, sqrt(photons)");
    readout->add_option("--eta", ro.eta, "measurement efficiency");
    readout->add_flag("--no-preselect", ro.no_preselect);

    FluxArgs fl;
    auto* flux = app.add_subcommand("flux", "cryoscope, pre-distortion design, closed-loop verification");
    flux->add_option("action", fl.sub)->required()->check(CLI::IsMember({"cryoscope", "predistort", "verify"}));
    flux->add_option("--qubit", fl.qubit, "pulsed qubit (default: first qubit idling at zero flux)");
    flux->add_flag("--no-correction", fl.no_correction, "play the pulse without pre-distortion");
    flux->add_option("--detuning-ghz", fl.detuning_ghz)->capture_default_str();
    flux->add_option("--pulse-ns", fl.pulse_ns)->capture_default_str();
    flux->add_option("--budget-mhz", fl.budget_mhz)->capture_default_str();
    flux->add_option("--phase-noise-rad", fl.phase_noise_rad)->capture_default_str();

    GateArgs ga;
    auto* gate = app.add_subcommand("gate", "two-tone spectroscopy, chevron, CZ calibration");
    gate->add_option("action", ga.sub)->required()->check(CLI::IsMember({"spectroscopy", "chevron", "calibrate"}));
    gate->add_option("--pair", ga.pair, "coupler, counted from 1")->capture_default_str();
    gate->add_option("--noise-mhz", ga.noise_mhz, "spectroscopy line noise")->capture_default_str();
    gate->add_option("--span", ga.span, "spectroscopy half-span in flux")->capture_default_str();
    gate->add_option("--points", ga.points)->capture_default_str();
    gate->add_option("--amplitudes", ga.amplitudes, "chevron qubit-2 amplitudes")->delimiter(',');
    gate->add_option("--max-ns", ga.max_ns, "longest chevron pulse")->capture_default_str();
    gate->add_flag("--skip-noise", ga.skip_noise, "skip the dissipative gate-error evaluation");

    BenchArgs be;
    auto* bench = app.add_subcommand("bench", "randomized benchmarking and summary report");
    bench->add_option("action", be.sub)->required()->check(CLI::IsMember({"rb1", "rb2", "irb", "report"}));
    bench->add_option("--model", be.model)->check(CLI::IsMember({"depolarizing", "dynamics"}))->capture_default_str();
    bench->add_option("--pair", be.pair)->capture_default_str();
    bench->add_option("--epc", be.epc, "injected error per Clifford (rb1 takes one per qubit)")->delimiter(',');
    bench->add_option("--irb-epc", be.irb_epc, "injected error per Clifford of the interleaved sequence");
    bench->add_option("--zz-mhz", be.zz_mhz, "static ZZ during simultaneous RB")->capture_default_str();
    bench->add_option("--randomizations", be.randomizations)->capture_default_str();
    bench->add_option("--shots", be.shots)->capture_default_str();
    bench->add_option("--lengths", be.lengths)->delimiter(',');
    bench->add_option("--cz-pulse", be.cz_pulse, "pulse file from gate calibrate (default: <out>/cz_pulse.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInput;
    }

    const auto start = std::chrono::steady_clock::now();
    Context ctx;
    ctx.config_path = config;
    ctx.out = out;
    ctx.seed = seed;
    ctx.seed_given = seed_opt->count() > 0;
    ctx.stamp = stamp;
    ctx.format = format == "json" ? Format::Json : Format::Csv;
    if (const auto n = thread_count(threads)) {
        qtwin::set_worker_count(n);
    }

    int code = kOk;
    try {
        // validated before anything is written
        ctx.device = qtwin::load_device(config);
        if (fit->parsed()) {
            ctx.experiment = "fit-device";
            code = cmd_fit_device(ctx);
        } else if (readout->parsed()) {
            ctx.experiment = "readout " + ro.sub;
            code = cmd_readout(ctx, ro);
        } else if (flux->parsed()) {
            ctx.experiment = "flux " + fl.sub;
            code = cmd_flux(ctx, fl);
        } else if (gate->parsed()) {
            ctx.experiment = "gate " + ga.sub;
            code = cmd_gate(ctx, ga);
        } else if (bench->parsed()) {
            ctx.experiment = "bench " + be.sub;
            code = cmd_bench(ctx, be);
        }
    } catch (const qtwin::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        code = exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        code = kInput;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        code = kNumerical;
    }
    if (!ctx.written.empty()) {
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        try {
            ctx.write_manifest(secs);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: manifest: %s\n", e.what());
            return code == kOk ? kInput : code;
        }
    }
    return code;
}
