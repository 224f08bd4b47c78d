#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace countreg::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,        ///< usage, schema, parse and domain errors
    kExitConvergence = 2,  ///< non-convergence or singular fits
    kExitIo = 3,
};

struct RunConfig {
    std::string command;
    std::filesystem::path input;
    std::string family = "poisson";  ///< linear | pc | poisson | nb2
    std::optional<double> gamma;
    std::optional<std::vector<double>> grid;
    std::string case_label = "full";
    double variance_target = 0.99;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = ".";
    std::string format = "json";  ///< json | csv
    std::size_t m = 41;
    int bins = 10;
    std::map<std::string, double> beta;
    unsigned threads = 0;
};

/// Parses argv-style arguments (without the program name) and runs the command.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_fit(const RunConfig& config, std::ostream& out);
int cmd_jackknife(const RunConfig& config, std::ostream& out);
int cmd_sweep(const RunConfig& config, std::ostream& out);
int cmd_cases(const RunConfig& config, std::ostream& out);
int cmd_simulate(const RunConfig& config, std::ostream& out);
int cmd_plotdata(const RunConfig& config, std::ostream& out);

/// Parses "0.01,0.2,1.5". Throws on empty or malformed lists.
std::vector<double> parse_grid(const std::string& text);

}  // namespace countreg::cli
