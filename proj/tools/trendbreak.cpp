// Command-line driver: change-point detection, lambda-grid scans, and
// Monte-Carlo studies on drifting random-walk series.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trendbreak/trendbreak.hpp"

namespace tb = trendbreak;

namespace {

tb::ColumnSpec parse_column(const std::string& col) {
    if (!col.empty() && col.find_first_not_of("0123456789") == std::string::npos) {
        return static_cast<std::size_t>(std::stoul(col));
    }
    return col;
}

tb::ThresholdRule parse_threshold(const std::string& spec) {
    if (spec == "max-df") return tb::MaxDfRule{};
    if (spec.rfind("percentile:", 0) == 0) {
        return tb::PercentileRule{std::stod(spec.substr(11))};
    }
    if (spec.rfind("top-k:", 0) == 0) {
        return tb::TopKRule{std::stoi(spec.substr(6))};
    }
    throw tb::InputError("bad --threshold '" + spec +
                         "' (expected max-df, percentile:<a>, or top-k:<k>)");
}

std::vector<double> parse_grid(const std::string& spec) {
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw tb::InputError("bad --grid '" + spec + "' (expected lo:hi:step)");
    }
    const double lo = std::stod(spec.substr(0, c1));
    const double hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(spec.substr(c2 + 1));
    if (!(step > 0.0) || hi < lo) throw tb::InputError("bad --grid range");
    std::vector<double> g;
    for (double v = lo; v <= hi + 1e-12 * step; v += step) g.push_back(v);
    return g;
}

tb::ScenarioSpec scenario_from_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tb::InputError("cannot open scenario file: " + path);
    nlohmann::json j;
    in >> j;
    tb::ScenarioSpec spec;
    spec.length = j.at("length").get<std::size_t>();
    spec.sigma = j.at("sigma").get<double>();
    for (const auto& s : j.at("segments")) {
        spec.segments.push_back(
            {s.at("start").get<int>(), s.at("end").get<int>(), s.at("drift").get<double>()});
    }
    tb::validate_scenario(spec);
    return spec;
}

struct CommonInput {
    std::string input;
    std::string column;
    std::string scenario;
    std::uint64_t seed = 0;
};

tb::TimeSeries load_series(const CommonInput& ci) {
    if (!ci.input.empty()) {
        if (ci.column.empty()) return tb::ingest_csv_auto(ci.input);
        return tb::ingest_csv(ci.input, parse_column(ci.column));
    }
    if (ci.scenario.empty()) {
        throw tb::InputError("provide --input FILE or --scenario {no-cp|two-cp} with --seed");
    }
    return tb::simulate_random_walk(tb::builtin_scenario(ci.scenario), ci.seed);
}

void emit(const std::string& human, const std::string& machine, const std::string& out_path) {
    std::cout << human;
    if (!out_path.empty()) {
        tb::write_atomic(out_path, machine);
        std::cout << "written: " << out_path << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trendbreak: change-point detection for random-walk time series"};
    app.require_subcommand(1);

    // ---- detect ----
    auto* detect = app.add_subcommand("detect", "detect change points in a series");
    std::string method = "l1";
    double lambda = 1.0;
    double alpha = 0.05;
    std::string threshold = "max-df";
    double penalty = 1.0;
    int iterations = 400;
    std::string optimizer = "rprop";
    int pelt_min_seg = 1;
    int pelt_step = 1;
    CommonInput din;
    std::string dout;
    detect->add_option("--method", method, "hp, l1, or pelt")->default_str("l1");
    detect->add_option("--lambda", lambda, "penalty parameter for hp/l1");
    detect->add_option("--alpha", alpha, "significance level");
    detect->add_option("--threshold", threshold, "l1 rule: max-df, percentile:<a>, top-k:<k>");
    detect->add_option("--penalty", penalty, "pelt per-change penalty");
    detect->add_option("--iterations", iterations, "l1 optimizer iterations");
    detect->add_option("--optimizer", optimizer, "rprop or proximal");
    detect->add_option("--min-segment", pelt_min_seg, "pelt minimum segment length");
    detect->add_option("--candidate-step", pelt_step, "pelt boundary grid step");
    detect->add_option("--input", din.input, "CSV input path");
    detect->add_option("--column", din.column, "value column (name or index)");
    detect->add_option("--scenario", din.scenario, "builtin scenario instead of a file");
    detect->add_option("--seed", din.seed, "scenario seed")->envname("TRENDBREAK_SEED");
    detect->add_option("--output", dout, "machine-readable report path (JSON)");

    // ---- scan ----
    auto* scan = app.add_subcommand("scan", "lambda-grid scan with selection");
    std::string s_method = "l1";
    std::string grid = "1:100:1";
    double s_alpha = 0.05;
    int s_iterations = 400;
    std::string s_optimizer = "rprop";
    CommonInput sin;
    std::string sout;
    scan->add_option("--method", s_method, "hp or l1");
    scan->add_option("--grid", grid, "lambda grid lo:hi:step");
    scan->add_option("--alpha", s_alpha, "significance level");
    scan->add_option("--iterations", s_iterations, "l1 optimizer iterations");
    scan->add_option("--optimizer", s_optimizer, "rprop or proximal");
    scan->add_option("--input", sin.input, "CSV input path");
    scan->add_option("--column", sin.column, "value column (name or index)");
    scan->add_option("--scenario", sin.scenario, "builtin scenario instead of a file");
    scan->add_option("--seed", sin.seed, "scenario seed")->envname("TRENDBREAK_SEED");
    scan->add_option("--output", sout, "scan table path (CSV)");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo study over a scenario");
    std::string m_scenario = "no-cp";
    std::string m_input;
    std::size_t reps = 1000;
    std::uint64_t m_seed = 20240101;
    double hp_lambda = 13.0;
    std::optional<double> l1_lambda;
    std::string m_threshold = "max-df";
    double m_penalty = 1.0;
    int m_iterations = 400;
    std::string m_optimizer = "rprop";
    double m_alpha = 0.05;
    std::string mout;
    sim->add_option("--scenario", m_scenario, "no-cp, two-cp, or file");
    sim->add_option("--input", m_input, "scenario spec (JSON) when --scenario file");
    sim->add_option("--reps", reps, "replications");
    sim->add_option("--seed", m_seed, "base seed")->envname("TRENDBREAK_SEED");
    sim->add_option("--hp-lambda", hp_lambda, "hp penalty");
    sim->add_option("--lambda", l1_lambda, "l1 penalty (default 1 for no-cp, 2 for two-cp)");
    sim->add_option("--threshold", m_threshold, "l1 rule");
    sim->add_option("--penalty", m_penalty, "pelt penalty");
    sim->add_option("--iterations", m_iterations, "l1 optimizer iterations");
    sim->add_option("--optimizer", m_optimizer, "rprop or proximal");
    sim->add_option("--alpha", m_alpha, "significance level");
    sim->add_option("--output", mout, "summary table path (CSV)");

    try {
        app.parse(argc, argv);

        if (detect->parsed()) {
            const tb::TimeSeries y = load_series(din);
            tb::ChangePointReport rep;
            if (method == "hp") {
                rep = tb::hp_detect(tb::hp_fit(y, lambda), alpha);
                const int flags = static_cast<int>(rep.flagged_indices.size());
                const double mu = static_cast<double>(flags) / static_cast<double>(y.size());
                rep.diagnostics.prob = tb::poisson_prob_at_least_one(mu, 1.0);
            } else if (method == "l1") {
                tb::L1Config cfg;
                cfg.max_iterations = iterations;
                const tb::Optimizer opt =
                    optimizer == "proximal" ? tb::Optimizer::proximal : tb::Optimizer::rprop;
                tb::L1Fit fit = tb::l1_fit(y, lambda, opt, cfg);
                rep = tb::l1_threshold_detect(fit, parse_threshold(threshold));
            } else if (method == "pelt") {
                rep = tb::pelt_report(y, tb::pelt_l2(y, penalty, pelt_min_seg, pelt_step),
                                      penalty);
            } else {
                throw tb::InputError("unknown --method '" + method + "'");
            }
            emit(tb::report_to_text(rep, y.labels), tb::report_to_json(rep).dump(2) + "\n", dout);
        } else if (scan->parsed()) {
            const tb::TimeSeries y = load_series(sin);
            const std::vector<double> g = parse_grid(grid);
            std::ostringstream human;
            std::string machine;
            if (s_method == "hp") {
                const tb::HpScanResult res = tb::hp_lambda_scan(y, g, s_alpha);
                machine = tb::hp_scan_to_csv(res);
                human << machine;
                if (res.selected_lambda) {
                    human << "selected_lambda: " << *res.selected_lambda << "\n";
                } else {
                    human << "selected_lambda: none\n";
                }
            } else if (s_method == "l1") {
                tb::L1Config cfg;
                cfg.max_iterations = s_iterations;
                const tb::Optimizer opt =
                    s_optimizer == "proximal" ? tb::Optimizer::proximal : tb::Optimizer::rprop;
                const tb::L1ScanResult res = tb::l1_lambda_scan(y, g, s_alpha, cfg, opt);
                machine = tb::l1_scan_to_csv(res);
                human << machine;
                if (res.selected_lambda) {
                    human << "selected_lambda: " << *res.selected_lambda << "\n";
                } else {
                    human << "selected_lambda: none\n";
                }
            } else {
                throw tb::InputError("scan supports --method hp or l1");
            }
            emit(human.str(), machine, sout);
        } else if (sim->parsed()) {
            tb::ScenarioSpec spec;
            if (m_scenario == "file") {
                if (m_input.empty()) throw tb::InputError("--scenario file needs --input");
                spec = scenario_from_json(m_input);
            } else {
                spec = tb::builtin_scenario(m_scenario);
            }
            double l1lam = l1_lambda.value_or(m_scenario == "two-cp" ? 2.0 : 1.0);
            tb::L1Config cfg;
            cfg.max_iterations = m_iterations;
            tb::L1Method l1m{l1lam, parse_threshold(m_threshold),
                             m_optimizer == "proximal" ? tb::Optimizer::proximal
                                                       : tb::Optimizer::rprop,
                             cfg};
            std::vector<tb::StudyMethod> methods{tb::HpMethod{hp_lambda, m_alpha}, l1m,
                                                 tb::PeltMethod{m_penalty}};
            tb::SimulationSummary summary = tb::run_study(spec, methods, reps, m_seed);
            summary.scenario = m_scenario;
            emit(tb::summary_to_text(summary), tb::summary_to_csv(summary), mout);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tb::SingularityError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const tb::InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
