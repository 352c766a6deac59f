// SPDX-License-Identifier: Apache-2.0
//
// simcascade: multi-port S-parameter simulator for stacked active metasurfaces
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include "simcascade/commands.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace simcascade;

namespace {

// Sends the command's output to --out when given, else to stdout.
int with_output(const std::string& out_path, const std::function<int(std::ostream&)>& body) {
    if (out_path.empty()) return body(std::cout);
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw SchemaError("--out", "cannot write " + out_path);
    const int code = body(file);
    file.flush();
    if (!file) throw std::runtime_error("writing " + out_path + " failed");
    return code;
}

ScenarioConfig config_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed) {
    ScenarioConfig c = load_config(path);
    if (seed) c.seed = *seed;
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate and optimize stacked active metasurfaces from multi-port scattering blocks"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;

    auto* optimize = app.add_subcommand("optimize", "run one optimization and print a JSON report");
    optimize->add_option("--config", config_path, "scenario config (JSON)")->required();
    optimize->add_option("--out", out_path, "write the report here instead of stdout");
    optimize->add_option("--seed", seed, "override the config seed");

    cli::SweepRequest sweep_req;
    std::string axis = "bandwidth";
    auto* sweep = app.add_subcommand("sweep", "sweep bandwidth, gain or layer spacing and print CSV");
    sweep->add_option("--config", config_path, "scenario config (JSON)")->required();
    sweep->add_option("--out", out_path, "write the CSV here instead of stdout");
    sweep->add_option("--seed", seed, "override the config seed");
    sweep->add_option("--axis", axis, "bandwidth | gain | spacing")->check(CLI::IsMember({"bandwidth", "gain", "spacing"}));
    sweep->add_option("--values", sweep_req.values, "Hz, dB or wavelengths depending on the axis");
    sweep->add_option("--jobs", sweep_req.jobs, "concurrent sweep points")->check(CLI::PositiveNumber);

    cli::VerifyRequest verify_req;
    std::vector<int> random_dims;
    std::uint64_t verify_seed = 0;
    auto* verify = app.add_subcommand("verify", "cross-check the cascade against the global solve");
    auto* verify_config = verify->add_option("--config", config_path, "scenario config (JSON)");
    auto* verify_random = verify->add_option("--random", random_dims, "random instance Q K L M")->expected(4);
    verify_config->excludes(verify_random);
    verify->add_option("--seed", verify_seed, "seed for the random instance and phases");
    verify->add_option("--gain", verify_req.gain, "linear gain amplitude for random instances (0 gives Gamma = 0)");
    verify->add_option("--out", out_path, "write the report here instead of stdout");

    cli::BenchRequest bench_req;
    auto* bench = app.add_subcommand("bench", "count multiply-accumulates per iteration and print CSV");
    bench->add_option("--max-q", bench_req.max_q, "largest layer count (grid doubles from 1)")->check(CLI::PositiveNumber);
    bench->add_option("--max-k", bench_req.max_k, "largest cell count (grid doubles from 1)")->check(CLI::PositiveNumber);
    bench->add_option("--reps", bench_req.repetitions, "repetitions per grid point")->check(CLI::PositiveNumber);
    bench->add_option("--ports", bench_req.ports, "transmit and receive antennas")->check(CLI::PositiveNumber);
    bench->add_option("--oracle-max-n", bench_req.oracle_max_n, "skip oracle solves above this many SIM ports")
        ->check(CLI::PositiveNumber);
    bench->add_option("--seed", bench_req.seed, "instance seed");
    bench->add_option("--out", out_path, "write the CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::usage_error;
    }

    return cli::guarded(
        [&] {
            if (optimize->parsed())
                return with_output(out_path, [&](std::ostream& out) {
                    return cli::cmd_optimize(config_with_seed(config_path, seed), out);
                });
            if (sweep->parsed()) {
                sweep_req.axis = cli::parse_axis(axis);
                return with_output(out_path, [&](std::ostream& out) {
                    return cli::cmd_sweep(config_with_seed(config_path, seed), sweep_req, out);
                });
            }
            if (verify->parsed()) {
                if (config_path.empty() && random_dims.empty())
                    throw ArgumentError("verify needs --config PATH or --random Q K L M");
                verify_req.seed = verify_seed;
                if (!config_path.empty()) {
                    verify_req.config = load_config(config_path);
                    if (verify->count("--seed")) verify_req.config->seed = verify_seed;
                } else {
                    std::copy(random_dims.begin(), random_dims.end(), verify_req.random.begin());
                }
                return with_output(out_path, [&](std::ostream& out) { return cli::cmd_verify(verify_req, out); });
            }
            return with_output(out_path, [&](std::ostream& out) { return cli::cmd_bench(bench_req, out); });
        },
        std::cerr);
}
