#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "uhopt/uhopt.h"

namespace uhopt::cli {

// Failure reported by the library, with its status code.
class ApiError : public std::runtime_error {
public:
    ApiError(uhopt_status status, const std::string& message)
        : std::runtime_error(message), status_(status) {}
    uhopt_status status() const noexcept { return status_; }

private:
    uhopt_status status_;
};

struct RunResult {
    // One-line human summary.
    std::string summary;
    std::vector<std::string> files;
};

// Runs the configured experiment and writes its CSV files into out_dir.
RunResult run_experiment(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace uhopt::cli
