#pragma once

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace infra {

/** Process exit codes; 0 iff every verdict passed. */
enum ExitCode : int {
    kExitOk = 0,
    kExitVerdictFailed = 1,
    kExitSchemaError = 2,      // bad arguments, config or backend spec
    kExitCapExceeded = 3,      // trial, q or transform-cell cap hit
    kExitCertification = 4,    // backend witness constants do not hold
    kExitInternal = 5,
};

constexpr int kReportSchemaVersion = 1;

/** Everything a run depends on; identical configs give identical reports. */
struct RunConfig {
    std::string pipeline;  // circumference | dlog | pell | verify | bounds
    std::string verify_what;  // geomsum | coprime
    std::string formula;      // bounds: psuccess | psuccess-limit | periodic | dlog | dlog-simplified
    nlohmann::json backend;
    std::string target = "bs^1";
    std::uint64_t seed = 1;
    std::string delta = "1/1000";
    std::int64_t D = 0;
    std::int64_t trials = 100000;     // verify sweeps
    std::int64_t trials_cap = 0;      // circumference: 0 = 50 / analytic bound
    std::int64_t max_trials = 5'000'000;  // dlog
    std::int64_t cell_cap = std::int64_t{1} << 24;
    int kappa_grid = 64;
    std::int64_t k_max = -1;
    bool q_power_of_two = true;
    std::int64_t target_S = 32;
    std::int64_t max_q = std::int64_t{1} << 22;
    std::int64_t min_B = 0;
    std::int64_t q_override = 0;
    std::string engine = "auto";
    std::optional<std::string> circumference_hint;
    double S = 0, q = 0, N = 0, R = 0, d_min = 0, B = 0, p_g = 0.5;
    std::int64_t coprime_N = 1'000'000;
    std::string report_path;
    std::string trace_path;
    std::int64_t trace_cap = std::int64_t{1} << 20;  // doubles written at most
};

/** Validates a JSON RunConfig; throws std::invalid_argument on schema violations. */
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);

/** Executes one run and returns the report; exit_code is stored in it. */
nlohmann::json execute(const RunConfig& cfg);

/** Full command line entry point (args exclude the program name). */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace infra
