#include "transposer/cli.hpp"

#include "transposer/bsee.hpp"
#include "transposer/instances.hpp"
#include "transposer/io.hpp"
#include "transposer/nullctrl.hpp"
#include "transposer/slq.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

namespace transposer {

namespace {

using nlohmann::json;

std::uint64_t parse_seed(const std::string& text) {
    try {
        return std::stoull(text, nullptr, 16);
    } catch (const std::exception&) {
        throw std::invalid_argument("seed must be hexadecimal, got '" + text + "'");
    }
}

std::vector<int> parse_int_list(const std::string& text) {
    std::string raw = text;
    for (char& c : raw) {
        if (c == ',') c = ' ';
    }
    std::istringstream in(raw);
    std::vector<int> out;
    int v = 0;
    while (in >> v) out.push_back(v);
    if (out.empty()) throw std::invalid_argument("expected a comma-separated integer list");
    return out;
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    Config config(path.empty() ? std::map<std::string, std::string>{}
                               : parse_key_values(read_file(path)));
    for (const auto& o : overrides) config.apply_override(o);
    return config;
}

CatalogLimits limits_from(const Config& config) {
    CatalogLimits limits;
    limits.max_slots = config.get_int("caps.N", limits.max_slots);
    limits.max_degree = config.get_int("caps.M", limits.max_degree);
    return limits;
}

Eigen::MatrixXd parse_matrix(const std::string& text, int n, const std::string& key) {
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t sep = text.find(';', pos);
        std::string row = text.substr(pos, sep == std::string::npos ? std::string::npos : sep - pos);
        for (char& c : row) {
            if (c == ',') c = ' ';
        }
        std::istringstream in(row);
        std::vector<double> entries;
        double v = 0.0;
        while (in >> v) entries.push_back(v);
        rows.push_back(std::move(entries));
        if (sep == std::string::npos) break;
        pos = sep + 1;
    }
    if (static_cast<int>(rows.size()) != n) {
        throw std::invalid_argument(key + " needs " + std::to_string(n) + " ';'-separated rows");
    }
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r) {
        if (static_cast<int>(rows[r].size()) != n) {
            throw std::invalid_argument(key + " row " + std::to_string(r) + " needs " +
                                        std::to_string(n) + " entries");
        }
        for (int c = 0; c < n; ++c) m(r, c) = rows[r][c];
    }
    return m;
}

const std::vector<std::string> kBseeKeys = {
    "T", "N", "n", "M", "caps.N", "caps.M", "driver.kind", "driver.La", "driver.Lb",
    "driver.f", "terminal.kind", "terminal.file", "terminal.values", "terminal.load"};

BseeProblem load_bsee_problem(const Config& config) {
    config.reject_unknown(kBseeKeys);
    const double T = config.get_double("T");
    const int N = config.get_int("N");
    const int n = config.get_int("n");
    const int M = config.get_int("M");
    const CatalogLimits limits = limits_from(config);
    const CatalogPtr cat = make_catalog(N, M, limits);

    BseeProblem problem;
    problem.partition = Partition(T, N);
    problem.basis = SpectralBasis{n};
    problem.chaos_degree = M;

    const std::string kind = config.get_string("driver.kind", "zero");
    if (kind == "zero") {
        problem.driver = ZeroDriver{};
    } else if (kind == "affine") {
        AffineDriver driver;
        if (config.has("driver.La")) {
            driver.state_gain = parse_matrix(config.get_string("driver.La"), n, "driver.La");
        }
        if (config.has("driver.Lb")) {
            driver.corr_gain = parse_matrix(config.get_string("driver.Lb"), n, "driver.Lb");
        }
        if (config.has("driver.f")) {
            const std::vector<double> f = config.get_doubles("driver.f");
            if (static_cast<int>(f.size()) != n) {
                throw std::invalid_argument("driver.f needs one value per mode");
            }
            ChaosRv source(cat, n);
            for (int m = 0; m < n; ++m) source.at(m, 0) = f[m];
            driver.source.assign(N, source);
        }
        problem.driver = std::move(driver);
    } else if (kind == "lipschitz") {
        throw std::invalid_argument(
            "driver.kind=lipschitz is not expressible in a problem file; use the library API");
    } else {
        throw std::invalid_argument("driver.kind must be zero or affine, got '" + kind + "'");
    }

    const std::string terminal_kind = config.get_string("terminal.kind", "file");
    if (terminal_kind == "file") {
        problem.terminal =
            chaos_rv_from_csv(read_file(config.get_string("terminal.file")), limits);
        if (problem.terminal.catalog().slots() != N ||
            problem.terminal.catalog().max_degree() != M) {
            throw std::invalid_argument("terminal file does not match N/M of the problem");
        }
    } else if (terminal_kind == "zero") {
        problem.terminal = ChaosRv(cat, n);
    } else if (terminal_kind == "values") {
        const std::vector<double> values = config.get_doubles("terminal.values");
        if (static_cast<int>(values.size()) != n) {
            throw std::invalid_argument("terminal.values needs one value per mode");
        }
        ChaosRv terminal(cat, n);
        for (int m = 0; m < n; ++m) terminal.at(m, 0) = values[m];
        problem.terminal = std::move(terminal);
    } else if (terminal_kind == "wiener") {
        const double load = config.get_double("terminal.load", 1.0);
        ChaosRv terminal(cat, n);
        const double root_tau = std::sqrt(T / N);
        for (int j = 0; j < N; ++j) {
            terminal.at(0, cat->find(MultiIndex().raised(j))) = load * root_tau;
        }
        problem.terminal = std::move(terminal);
    } else {
        throw std::invalid_argument("terminal.kind must be file, zero, values or wiener");
    }
    return problem;
}

void write_solution(const std::filesystem::path& out_dir, const SolutionPair& solution) {
    write_file_atomic(out_dir / "a.csv", chaos_to_csv(solution.a));
    write_file_atomic(out_dir / "b.csv", chaos_to_csv(solution.b));
    json diag = {{"schema", 1},
                 {"iterations", solution.diagnostics.iterations},
                 {"residual", solution.diagnostics.residual},
                 {"scheme", solution.diagnostics.scheme},
                 {"converged", solution.diagnostics.converged}};
    write_file_atomic(out_dir / "diagnostics.json", diag.dump(2) + "\n");
}

void write_rate(const std::filesystem::path& out_dir, const RateReport& report) {
    write_file_atomic(out_dir / "rate.csv", report.to_csv());
    json j = {{"schema", 1},
              {"variable", report.variable},
              {"slope", report.slope},
              {"half_width", report.slope_half_width},
              {"fit_skipped", report.fit_skipped}};
    write_file_atomic(out_dir / "rate.json", j.dump(2) + "\n");
    std::cout << "slope " << format_double(report.slope) << " half_width "
              << format_double(report.slope_half_width) << "\n";
}

struct CommonFlags {
    std::string config_path;
    std::string out_dir = "out";
    std::string seed_hex = "5EED";
    std::vector<std::string> overrides;
};

void attach_common(CLI::App* cmd, CommonFlags& flags, bool config_required = true) {
    auto* opt = cmd->add_option("--config", flags.config_path, "problem file (key=value lines)");
    if (config_required) opt->required();
    cmd->add_option("--out", flags.out_dir, "output directory");
    cmd->add_option("--seed", flags.seed_hex, "hex seed for sampled quantities");
    cmd->add_option("--set", flags.overrides, "override key=value (repeatable)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"finite transposition solver for backward stochastic heat equations"};
    app.require_subcommand(1);

    // basis info
    auto* basis_cmd = app.add_subcommand("basis", "chaos basis utilities");
    basis_cmd->require_subcommand(1);
    auto* basis_info = basis_cmd->add_subcommand("info", "per-slot basis dimensions");
    int info_N = 0, info_M = 0;
    basis_info->add_option("--N", info_N, "slot count")->required();
    basis_info->add_option("--M", info_M, "chaos order")->required();

    // bsee
    auto* bsee_cmd = app.add_subcommand("bsee", "backward equation solver");
    bsee_cmd->require_subcommand(1);
    CommonFlags bsee_solve_flags, bsee_verify_flags;
    auto* bsee_solve_cmd = bsee_cmd->add_subcommand("solve", "solve a problem file");
    attach_common(bsee_solve_cmd, bsee_solve_flags);
    auto* bsee_verify_cmd =
        bsee_cmd->add_subcommand("verify", "solve and check the variational identity");
    attach_common(bsee_verify_cmd, bsee_verify_flags);

    CommonFlags time_flags, space_flags;
    std::string time_instance = "brownian-terminal";
    std::string time_steps = "8,16,32,64,128";
    auto* converge_time = bsee_cmd->add_subcommand("converge-time", "temporal rate sweep");
    attach_common(converge_time, time_flags, false);
    converge_time->add_option("--instance", time_instance, "registered instance name");
    converge_time->add_option("--steps", time_steps, "comma-separated N list");

    std::string space_modes = "2,4,8,16";
    auto* converge_space = bsee_cmd->add_subcommand("converge-space", "spatial rate sweep");
    attach_common(converge_space, space_flags, false);
    converge_space->add_option("--modes", space_modes, "comma-separated n list");

    // slq
    auto* slq_cmd = app.add_subcommand("slq", "linear-quadratic control");
    slq_cmd->require_subcommand(1);
    CommonFlags slq_flags;
    auto* slq_solve_cmd = slq_cmd->add_subcommand("solve", "gradient iteration");
    attach_common(slq_solve_cmd, slq_flags);

    // nullctrl
    auto* null_cmd = app.add_subcommand("nullctrl", "minimal-norm null control");
    null_cmd->require_subcommand(1);
    CommonFlags null_solve_flags, null_verify_flags;
    auto* null_solve_cmd = null_cmd->add_subcommand("solve", "minimize the dual functional");
    attach_common(null_solve_cmd, null_solve_flags);
    auto* null_verify_cmd = null_cmd->add_subcommand("verify", "terminal energy of a control");
    attach_common(null_verify_cmd, null_verify_flags);
    std::string verify_control_path;
    null_verify_cmd->add_option("--control", verify_control_path, "control chaos_vec CSV")
        ->required();

    try {
        std::vector<const char*> argv;
        argv.push_back("transposer");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            return app.exit(e);
        }
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (basis_info->parsed()) {
            if (info_N < 0 || info_M < 0) throw std::invalid_argument("N and M must be >= 0");
            std::ostringstream dims;
            std::uint64_t total = 0;
            for (int k = 0; k <= info_N; ++k) {
                if (k) dims << ' ';
                const std::uint64_t mk = basis_count(k, info_M);
                dims << mk;
                if (k < info_N) total += mk;
            }
            std::cout << "slot dims (k=0.." << info_N << "): " << dims.str() << "\n";
            std::cout << "process space total (sum k<N): " << total << "\n";
            return 0;
        }

        if (bsee_solve_cmd->parsed() || bsee_verify_cmd->parsed()) {
            const bool verify = bsee_verify_cmd->parsed();
            const CommonFlags& flags = verify ? bsee_verify_flags : bsee_solve_flags;
            const Config config = load_config(flags.config_path, flags.overrides);
            const BseeProblem problem = load_bsee_problem(config);
            const SolutionPair solution = solve_linear(problem);
            const std::filesystem::path out_dir(flags.out_dir);
            write_solution(out_dir, solution);
            if (verify) {
                const double residual = variational_residual(solution, problem);
                json j = {{"schema", 1}, {"residual", residual}};
                write_file_atomic(out_dir / "verify.json", j.dump(2) + "\n");
                std::cout << "variational residual " << format_double(residual) << "\n";
            }
            return solution.diagnostics.converged ? 0 : 1;
        }

        if (converge_time->parsed()) {
            ErrorOptions options;
            options.seed = parse_seed(time_flags.seed_hex);
            TimeRateInstance instance;
            if (time_instance == "brownian-terminal") {
                instance = brownian_terminal_instance();
            } else if (time_instance == "sin-driver") {
                instance = sin_driver_instance();
            } else {
                throw std::invalid_argument("unknown instance '" + time_instance +
                                            "' (try brownian-terminal or sin-driver)");
            }
            const std::vector<int> steps = parse_int_list(time_steps);
            RateReport report;
            if (instance.nonlinear) {
                const int reference = *std::max_element(steps.begin(), steps.end()) * 2;
                std::vector<int> coarse;
                for (int N : steps) {
                    if (N != reference) coarse.push_back(N);
                }
                report = sweep_time_self(instance, coarse, reference, options);
            } else {
                report = sweep_time(instance, steps, options);
            }
            write_rate(std::filesystem::path(time_flags.out_dir), report);
            return 0;
        }

        if (converge_space->parsed()) {
            ErrorOptions options;
            options.seed = parse_seed(space_flags.seed_hex);
            const RateReport report =
                sweep_space(spectral_tail_instance(), parse_int_list(space_modes), options);
            write_rate(std::filesystem::path(space_flags.out_dir), report);
            return 0;
        }

        if (slq_solve_cmd->parsed()) {
            const Config config = load_config(slq_flags.config_path, slq_flags.overrides);
            config.reject_unknown({"T", "N", "n", "M", "caps.N", "caps.M", "slq.y0", "slq.sigma",
                                   "slq.kappa", "slq.tol", "slq.max_iter"});
            SlqProblem problem;
            problem.partition = Partition(config.get_double("T"), config.get_int("N"));
            problem.basis = SpectralBasis{config.get_int("n")};
            problem.chaos_degree = config.get_int("M", 1);
            problem.y0.values = config.get_doubles("slq.y0");
            problem.sigma.values = config.get_doubles("slq.sigma");
            problem.kappa = config.get_double("slq.kappa", 0.0);
            SlqOptions options;
            options.tol = config.get_double("slq.tol", 1e-8);
            options.max_iter = config.get_int("slq.max_iter", 500);

            const SlqResult result = gradient_iterate(problem, options);
            const std::filesystem::path out_dir(slq_flags.out_dir);

            std::ostringstream history;
            history << "# schema=1\n";
            history << "iter,cost,residual\n";
            for (std::size_t i = 0; i < result.history.size(); ++i) {
                history << i << ',' << format_double(result.history[i].cost) << ','
                        << format_double(result.history[i].residual) << "\n";
            }
            write_file_atomic(out_dir / "history.csv", history.str());

            const SlqIterate& last = result.history.back();
            write_file_atomic(out_dir / "control.csv", chaos_to_csv(last.control));
            json index = {{"schema", 1}, {"grid_times", json::array()}};
            for (int k = 0; k <= problem.partition.steps; ++k) {
                char name[32];
                std::snprintf(name, sizeof(name), "y_%04d.csv", k);
                write_file_atomic(out_dir / "state" / name, chaos_to_csv(last.state.at(k)));
                index["grid_times"].push_back(
                    {{"k", k}, {"t", problem.partition.time(k)}, {"file", name}});
            }
            write_file_atomic(out_dir / "state" / "index.json", index.dump(2) + "\n");
            json report = {{"schema", 1},
                           {"iterations", result.iterations},
                           {"converged", result.converged},
                           {"cost", last.cost},
                           {"residual", last.residual},
                           {"kappa", problem.effective_kappa()}};
            write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
            std::cout << "cost " << format_double(last.cost) << " residual "
                      << format_double(last.residual) << " iterations " << result.iterations
                      << "\n";
            return result.converged ? 0 : 1;
        }

        if (null_solve_cmd->parsed() || null_verify_cmd->parsed()) {
            const bool verify = null_verify_cmd->parsed();
            const CommonFlags& flags = verify ? null_verify_flags : null_solve_flags;
            const Config config = load_config(flags.config_path, flags.overrides);
            config.reject_unknown(
                {"T", "N", "n", "M", "caps.N", "caps.M", "nullctrl.y0", "nullctrl.tol"});
            NullControlProblem problem;
            problem.partition = Partition(config.get_double("T"), config.get_int("N"));
            problem.basis = SpectralBasis{config.get_int("n")};
            problem.chaos_degree = config.get_int("M", 1);
            problem.y0.values = config.get_doubles("nullctrl.y0");
            const std::filesystem::path out_dir(flags.out_dir);

            if (verify) {
                const ChaosVec control =
                    chaos_vec_from_csv(read_file(verify_control_path), limits_from(config));
                const double terminal_energy = verify_null(control, problem);
                ChaosVec zero(control.catalog_ptr(), control.modes(), control.degree_bound());
                const double uncontrolled = verify_null(zero, problem);
                json j = {{"schema", 1},
                          {"terminal_energy", terminal_energy},
                          {"uncontrolled_energy", uncontrolled}};
                write_file_atomic(out_dir / "verify.json", j.dump(2) + "\n");
                std::cout << "terminal energy " << format_double(terminal_energy)
                          << " uncontrolled " << format_double(uncontrolled) << "\n";
                return 0;
            }

            const double tol = config.get_double("nullctrl.tol", 1e-10);
            const MinimizeResult result = minimize_J(problem, tol);
            write_file_atomic(out_dir / "zhat.csv", chaos_to_csv(result.z_terminal));
            write_file_atomic(out_dir / "control.csv", chaos_to_csv(result.control));
            json report = {{"schema", 1},
                           {"J_value", result.report.J_value},
                           {"grad_norm", result.report.grad_norm},
                           {"terminal_energy", result.report.terminal_energy},
                           {"uncontrolled_energy", result.report.uncontrolled_energy},
                           {"cg_iterations", result.report.cg_iterations}};
            write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
            std::cout << "J " << format_double(result.report.J_value) << " terminal energy "
                      << format_double(result.report.terminal_energy) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cerr << "error: no subcommand executed\n";
    return 2;
}

}  // namespace transposer
