#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace uhopt::cli {

namespace pt = boost::property_tree;

std::string experiment_name(Experiment e) {
    switch (e) {
        case Experiment::merton: return "merton";
        case Experiment::fixed_horizon: return "fixed-horizon";
        case Experiment::uncertain_horizon: return "uncertain-horizon";
        case Experiment::figure1_sweep: return "figure1-sweep";
        case Experiment::figure2_sweep: return "figure2-sweep";
    }
    return "unknown";
}

Experiment parse_experiment(const std::string& name) {
    static const std::map<std::string, Experiment> table{
        {"merton", Experiment::merton},
        {"fixed-horizon", Experiment::fixed_horizon},
        {"uncertain-horizon", Experiment::uncertain_horizon},
        {"figure1-sweep", Experiment::figure1_sweep},
        {"figure2-sweep", Experiment::figure2_sweep},
    };
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown experiment '" + name + "'");
    return it->second;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        const std::string tok = item.substr(b, e - b + 1);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + tok + "'");
        }
        if (used != tok.size()) throw ConfigError("not a number: '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

namespace {

double get_double(const pt::ptree& sec, const std::string& key, double fallback) {
    auto v = sec.get_optional<std::string>(key);
    if (!v) return fallback;
    const auto xs = parse_list(*v);
    if (xs.size() != 1) throw ConfigError("'" + key + "' expects a single number");
    return xs.front();
}

long long get_integer(const pt::ptree& sec, const std::string& key, long long fallback) {
    auto v = sec.get_optional<std::string>(key);
    if (!v) return fallback;
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(*v, &used);
    } catch (const std::exception&) {
        throw ConfigError("'" + key + "' expects an integer");
    }
    if (used != v->size()) throw ConfigError("'" + key + "' expects an integer");
    return x;
}

std::vector<double> get_list(const pt::ptree& sec, const std::string& key,
                             std::vector<double> fallback) {
    auto v = sec.get_optional<std::string>(key);
    if (!v) return fallback;
    return parse_list(*v);
}

void check_keys(const pt::ptree& root) {
    static const std::map<std::string, std::set<std::string>> schema{
        {"run", {"experiment", "x0", "n_paths", "seed", "budget_tol", "max_iterations", "workers"}},
        {"market", {"mu", "r", "sigma"}},
        {"contract", {"gamma", "alpha", "B", "K"}},
        {"horizon", {"dates", "probs", "T", "t_tilde"}},
        {"sweep", {"d", "p", "p1"}},
    };
    for (const auto& [section, body] : root) {
        auto it = schema.find(section);
        if (it == schema.end()) throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, _] : body) {
            if (!it->second.count(key))
                throw ConfigError("unknown key '" + key + "' in [" + section + "]");
        }
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(sigma, "sigma");
    positive(gamma, "gamma");
    positive(alpha, "alpha");
    positive(x0, "x0");
    positive(T, "T");
    positive(budget_tol, "budget_tol");
    if (!std::isfinite(mu) || !std::isfinite(r)) throw ConfigError("mu and r must be finite");
    if (B < 0.0 || K < 0.0) throw ConfigError("B and K must be nonnegative");
    if (dates.size() != probs.size()) throw ConfigError("dates and probs differ in length");
    if (n_paths < 2) throw ConfigError("n_paths must be at least 2");
    if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
    const bool needs_two_date = experiment == Experiment::uncertain_horizon ||
                                experiment == Experiment::figure2_sweep;
    if (needs_two_date && dates.size() != 1)
        throw ConfigError("experiment " + experiment_name(experiment) +
                          " needs exactly one intermediate date");
    if (experiment == Experiment::figure1_sweep) {
        if (sweep_d.empty()) throw ConfigError("[sweep] d is empty");
        if (!(sweep_p > 0.0 && sweep_p < 1.0)) throw ConfigError("[sweep] p must lie in (0, 1)");
        for (double d : sweep_d) {
            if (!(d > 0.0 && d < t_tilde)) throw ConfigError("[sweep] d must lie in (0, t_tilde)");
        }
    }
    if (experiment == Experiment::figure2_sweep) {
        if (sweep_p1.empty()) throw ConfigError("[sweep] p1 is empty");
        for (double p : sweep_p1) {
            if (!(p > 0.0 && p < 1.0)) throw ConfigError("[sweep] p1 must lie in (0, 1)");
        }
    }
}

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig load_config(const std::string& path) {
    pt::ptree root;
    try {
        pt::read_ini(path, root);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("cannot read config: " + std::string(e.what()));
    }
    check_keys(root);

    ExperimentConfig c;
    const pt::ptree empty;
    auto section = [&](const char* name) -> const pt::ptree& {
        auto child = root.get_child_optional(name);
        return child ? *child : empty;
    };

    const auto& run = section("run");
    if (auto e = run.get_optional<std::string>("experiment")) c.experiment = parse_experiment(*e);
    c.x0 = get_double(run, "x0", c.x0);
    const long long n = get_integer(run, "n_paths", static_cast<long long>(c.n_paths));
    if (n < 0) throw ConfigError("n_paths must be nonnegative");
    c.n_paths = static_cast<std::size_t>(n);
    const long long seed = get_integer(run, "seed", static_cast<long long>(c.seed));
    if (seed < 0) throw ConfigError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
    c.budget_tol = get_double(run, "budget_tol", c.budget_tol);
    c.max_iterations = static_cast<int>(get_integer(run, "max_iterations", c.max_iterations));
    const long long workers = get_integer(run, "workers", c.workers);
    if (workers < 0) throw ConfigError("workers must be nonnegative");
    c.workers = static_cast<unsigned>(workers);

    const auto& market = section("market");
    c.mu = get_double(market, "mu", c.mu);
    c.r = get_double(market, "r", c.r);
    c.sigma = get_double(market, "sigma", c.sigma);

    const auto& contract = section("contract");
    c.gamma = get_double(contract, "gamma", c.gamma);
    c.alpha = get_double(contract, "alpha", c.alpha);
    c.B = get_double(contract, "B", c.B);
    c.K = get_double(contract, "K", c.K);

    const auto& horizon = section("horizon");
    c.dates = get_list(horizon, "dates", c.dates);
    c.probs = get_list(horizon, "probs", c.probs);
    c.T = get_double(horizon, "T", c.T);
    c.t_tilde = get_double(horizon, "t_tilde", c.t_tilde);

    const auto& sweep = section("sweep");
    c.sweep_d = get_list(sweep, "d", c.sweep_d);
    c.sweep_p = get_double(sweep, "p", c.sweep_p);
    c.sweep_p1 = get_list(sweep, "p1", c.sweep_p1);
    return c;
}

}  // namespace uhopt::cli
