// emeter: phase-scan entanglement estimation from a command line.
//
//   emeter fringe --state bell --unitary swap --mode sampled --shots 100000
//   emeter protocol negativity --state '{"kind":"pure_schmidt","lambdas":[0.5,0.25,0.25]}'
//   emeter state validate --state spec.json
//   emeter selftest

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "em/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, em::cli::RunConfig& cfg, std::string& mode,
                        std::string& pairing, double& theta, int& m, bool state_required) {
    auto* state = cmd->add_option("--state", cfg.state_arg,
                                  "state: \"bell\", inline spec JSON, or a file path");
    if (state_required) state->required();
    cmd->add_option("--mode", mode, "exact|sampled")->check(CLI::IsMember({"exact", "sampled"}));
    cmd->add_option("--shots", cfg.shots, "shots per phase point (sampled mode)");
    cmd->add_option("--phases", cfg.phases, "number of phase-grid points");
    cmd->add_option("--seed", cfg.seed, "PRNG seed (default: EM_SEED or 42)");
    cmd->add_option("--theta", theta, "rotation angle override");
    cmd->add_option("--m", m, "number of basis pairs (mutual predictability)");
    cmd->add_option("--pairing", pairing, "same|conjugate")
        ->check(CLI::IsMember({"same", "conjugate"}));
    cmd->add_option("--output", cfg.output, "write to file instead of stdout");
    cmd->add_option("--format", cfg.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"interferometric entanglement estimation"};
    app.require_subcommand(1);

    em::cli::RunConfig cfg;
    std::string mode = "exact";
    std::string pairing = "conjugate";
    double theta = -1.0;
    int m = -1;

    CLI::App* fringe = app.add_subcommand("fringe", "emit one interference scan");
    fringe->add_option("--unitary", cfg.unitary, "identity|oracle|negativity|mp|swap")
        ->check(CLI::IsMember({"identity", "oracle", "negativity", "mp", "swap"}));
    add_common_options(fringe, cfg, mode, pairing, theta, m, true);

    CLI::App* protocol = app.add_subcommand("protocol", "run an estimation protocol");
    protocol
        ->add_option("name", cfg.protocol,
                     "linear-entropy|negativity|mutual-predictability|witness-swap|"
                     "witness-small-theta")
        ->required()
        ->check(CLI::IsMember({"linear-entropy", "negativity", "mutual-predictability",
                               "witness-swap", "witness-small-theta"}));
    add_common_options(protocol, cfg, mode, pairing, theta, m, true);

    CLI::App* state = app.add_subcommand("state", "state-spec utilities");
    state->require_subcommand(1);
    CLI::App* validate = state->add_subcommand("validate", "validate a state spec");
    add_common_options(validate, cfg, mode, pairing, theta, m, true);

    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in check suite");
    (void)selftest;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints the usage message; 0 for --help
        return code == 0 ? 0 : 2;
    }

    return em::cli::guarded(
        [&]() -> int {
            if (selftest->parsed()) return em::cli::cmd_selftest(std::cout);
            cfg.mode = mode == "sampled" ? em::RunMode::sampled : em::RunMode::exact;
            cfg.pairing = pairing == "same" ? em::Pairing::same : em::Pairing::conjugate;
            if (theta >= 0.0) cfg.theta = theta;
            if (m >= 0) cfg.m = m;
            if (fringe->count("--seed") == 0 && protocol->count("--seed") == 0 &&
                validate->count("--seed") == 0)
                cfg.seed = em::cli::default_seed();
            std::string payload;
            if (fringe->parsed())
                payload = em::cli::cmd_fringe(cfg);
            else if (protocol->parsed())
                payload = em::cli::cmd_protocol(cfg);
            else
                payload = em::cli::cmd_state_validate(cfg);
            em::cli::write_payload(cfg, payload, std::cout);
            return 0;
        },
        std::cerr);
}
