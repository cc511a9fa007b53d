#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "em/protocols.hpp"

namespace em::cli {

// Options shared by the CLI commands. `state_arg` accepts the literal alias
// "bell", an inline state-spec JSON object, or a path to a file holding one.
struct RunConfig {
    std::string protocol;
    std::string state_arg;
    std::string unitary = "identity"; // fringe: identity|oracle|negativity|mp|swap
    RunMode mode = RunMode::exact;
    long long shots = 100000;
    int phases = 16;
    std::uint64_t seed = 42;
    std::optional<double> theta;
    std::optional<int> m;
    Pairing pairing = Pairing::conjugate;
    std::string output; // file path; empty writes to stdout
    std::string format; // "csv" | "json"; empty picks the command default
};

// Seed default: EM_SEED from the environment when set, else 42.
std::uint64_t default_seed();

PreparedState resolve_state(const std::string& state_arg);

std::string cmd_fringe(const RunConfig& cfg);
std::string cmd_protocol(const RunConfig& cfg);
std::string cmd_state_validate(const RunConfig& cfg);
int cmd_selftest(std::ostream& out); // prints per-check lines + counts; 0 or 1

// Writes payload to cfg.output when set, otherwise to `out`.
void write_payload(const RunConfig& cfg, const std::string& payload, std::ostream& out);

// Runs body(), mapping InvalidInput to exit 2 and PreconditionError to exit 3
// (message on err). Verdicts never influence the exit code.
int guarded(const std::function<int()>& body, std::ostream& err);

} // namespace em::cli
