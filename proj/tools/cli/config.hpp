#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uhopt::cli {

// Raised for unreadable or invalid configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Experiment { merton, fixed_horizon, uncertain_horizon, figure1_sweep, figure2_sweep };

std::string experiment_name(Experiment e);
Experiment parse_experiment(const std::string& name);

// Defaults are the base case market and contract.
struct ExperimentConfig {
    Experiment experiment = Experiment::uncertain_horizon;

    double mu = 0.08;
    double r = 0.03;
    double sigma = 0.2;

    double gamma = 3.0;
    double alpha = 0.25;
    double B = 50.0;
    double K = 1.0;

    std::vector<double> dates{8.0};
    std::vector<double> probs{0.5};
    double T = 12.0;
    // Comparison horizon; must equal E[tau] where a comparison is made.
    double t_tilde = 10.0;

    double x0 = 100.0;
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    double budget_tol = 1e-3;
    int max_iterations = 200;
    unsigned workers = 0;

    // figure1-sweep: (T_1, T) = (t_tilde - d, t_tilde + d p / (1 - p)).
    std::vector<double> sweep_d{0.5, 1.0, 2.0, 3.0, 4.0};
    double sweep_p = 0.5;
    // figure2-sweep: P(tau = T_1) grid with T_1, T from [horizon].
    std::vector<double> sweep_p1{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};

    void validate() const;
};

// Reads an INI file over the defaults. Unknown sections or keys are errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig default_config();

std::vector<double> parse_list(const std::string& text);

}  // namespace uhopt::cli
