// Command-line front end for the coxrs shared library.
//
// Subcommands: simulate, fit, rs-solve, debias, experiment.
// Exit codes: 0 success, 2 partial replicate failures, 1 fatal.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coxrs.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, ptr);
}

void check(int status) {
    if (status != COXRS_OK) throw std::runtime_error(coxrs_last_error());
}

struct Step {
    std::vector<double> t, v;
    double eval(double x) const {
        auto it = std::upper_bound(t.begin(), t.end(), x);
        if (it == t.begin()) return 0.0;
        return v[static_cast<std::size_t>(it - t.begin()) - 1];
    }
};

int parse_hazard(const std::string& name) {
    if (name == "log_logistic") return COXRS_HAZARD_LOG_LOGISTIC;
    if (name == "weibull") return COXRS_HAZARD_WEIBULL;
    throw CLI::ValidationError("hazard must be log_logistic or weibull");
}

double base_cumhaz(int hazard, double t) {
    return hazard == COXRS_HAZARD_LOG_LOGISTIC ? std::log1p(t * t) : 0.5 * t * t;
}

struct DatasetHandle {
    coxrs_dataset* p = nullptr;
    ~DatasetHandle() { coxrs_dataset_free(p); }
};
struct FitHandle {
    coxrs_fit* p = nullptr;
    ~FitHandle() { coxrs_fit_free(p); }
};
struct RSHandle {
    coxrs_rs_solution* p = nullptr;
    ~RSHandle() { coxrs_rs_free(p); }
};
struct DebiasHandle {
    coxrs_debias_result* p = nullptr;
    ~DebiasHandle() { coxrs_debias_free(p); }
};

Step fit_breslow(const coxrs_fit* fit) {
    Step s;
    const long k = coxrs_fit_breslow_size(fit);
    s.t.resize(k);
    s.v.resize(k);
    check(coxrs_fit_breslow(fit, s.t.data(), s.v.data()));
    return s;
}

void write_step_csv(const fs::path& path, const Step& s, const char* header) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header << "\n";
    for (std::size_t i = 0; i < s.t.size(); ++i)
        out << fmt(s.t[i]) << "," << fmt(s.v[i]) << "\n";
}

void write_vector_csv(const fs::path& path, const std::vector<double>& v,
                      const char* header) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header << "\n";
    for (double x : v) out << fmt(x) << "\n";
}

std::vector<double> beta0_vector(long p, double S) {
    std::vector<double> b(p, 0.0);
    if (p > 0) b[0] = S;
    return b;
}

// ---- experiment orchestration -------------------------------------------

struct ExperimentConfig {
    std::string scenario = "custom";
    long n = 400;
    std::vector<double> zeta = {0.3};
    double S = 1.0;
    int hazard = COXRS_HAZARD_LOG_LOGISTIC;
    double t_max = 4.0;
    int replicates = 100;
    std::uint64_t seed = 1;
    std::uint64_t m = 100000;
    double damping = 0.5, tol = 1e-6;
    int max_sweeps = 500;
    double s_lo = 0.05, s_hi = 5.0, s_tol = 1e-3;
    int y_order = 16, z_order = 12;
    bool run_debias = false;

    json echo() const {
        json j;
        j["scenario"] = scenario;
        j["n"] = n;
        j["zeta"] = zeta;
        j["S"] = S;
        j["hazard"] = hazard == COXRS_HAZARD_LOG_LOGISTIC ? "log_logistic" : "weibull";
        j["t_max"] = t_max;
        j["replicates"] = replicates;
        j["seed"] = seed;
        j["m"] = m;
        j["damping"] = damping;
        j["tol"] = tol;
        j["max_sweeps"] = max_sweeps;
        j["s_lo"] = s_lo;
        j["s_hi"] = s_hi;
        j["s_tol"] = s_tol;
        j["debias"] = run_debias;
        return j;
    }
};

std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
    if (out.empty()) throw std::runtime_error("empty zeta grid");
    return out;
}

void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "scenario") cfg.scenario = val;
        else if (key == "n") cfg.n = std::stol(val);
        else if (key == "zeta") cfg.zeta = parse_grid(val);
        else if (key == "S") cfg.S = std::stod(val);
        else if (key == "hazard") cfg.hazard = parse_hazard(val);
        else if (key == "t_max") cfg.t_max = std::stod(val);
        else if (key == "replicates") cfg.replicates = std::stoi(val);
        else if (key == "seed") cfg.seed = std::stoull(val);
        else if (key == "m") cfg.m = std::stoull(val);
        else if (key == "damping") cfg.damping = std::stod(val);
        else if (key == "tol") cfg.tol = std::stod(val);
        else if (key == "max_sweeps") cfg.max_sweeps = std::stoi(val);
        else if (key == "s_lo") cfg.s_lo = std::stod(val);
        else if (key == "s_hi") cfg.s_hi = std::stod(val);
        else if (key == "s_tol") cfg.s_tol = std::stod(val);
        else if (key == "y_order") cfg.y_order = std::stoi(val);
        else if (key == "z_order") cfg.z_order = std::stoi(val);
        else if (key == "debias") cfg.run_debias = (val == "1" || val == "true");
        else
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unknown key " + key);
    }
}

void scenario_defaults(ExperimentConfig& cfg) {
    if (cfg.scenario == "figure1_cumhaz") cfg.zeta = {0.25, 0.5};
    else if (cfg.scenario == "figure2_overlaps") cfg.zeta = {0.1, 0.2, 0.3, 0.4, 0.5};
    else if (cfg.scenario == "figure3_debias_cumhaz") { cfg.zeta = {0.3}; cfg.run_debias = true; }
    else if (cfg.scenario == "figure4_S_hist") { cfg.zeta = {0.3, 0.4}; cfg.run_debias = true; }
    else if (cfg.scenario == "figure56_beta_hist") { cfg.zeta = {0.3}; cfg.run_debias = true; }
    else if (cfg.scenario != "custom")
        throw std::runtime_error("unknown scenario: " + cfg.scenario);
}

struct ReplicateFailure {
    double zeta;
    int replicate;
    std::string what;
};

struct FileRecord {
    std::string name;
    long rows = 0;  // data rows, header excluded
};

class CsvWriter {
public:
    CsvWriter(const fs::path& dir, std::vector<FileRecord>& manifest,
              const std::string& name, const std::string& header)
        : out_(dir / name), manifest_(manifest), name_(name) {
        if (!out_) throw std::runtime_error("cannot write " + (dir / name).string());
        out_ << header << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
        ++rows_;
    }
    ~CsvWriter() { manifest_.push_back({name_, rows_}); }

private:
    std::ofstream out_;
    std::vector<FileRecord>& manifest_;
    std::string name_;
    long rows_ = 0;
};

std::string zeta_tag(double z) {
    std::string s = fmt(z);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

struct SummaryRow {
    std::string label;
    std::vector<double> values;
};

void append_summary(std::vector<SummaryRow>& rows, const std::string& label,
                    const std::vector<double>& samples) {
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean = n > 0 ? mean / n : 0.0;
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    const double sd = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    const double se = n > 0 ? sd / std::sqrt(n) : 0.0;
    rows.push_back({label, {n, mean, sd, se}});
}

// Per-(zeta, replicate) generate + fit; throws on separation or non-convergence.
struct FittedReplicate {
    DatasetHandle data;
    FitHandle fit;
    long p = 0;
    double kappa_hat = 0.0, v_hat = 0.0, second_moment = 0.0;
};

FittedReplicate run_replicate(const ExperimentConfig& cfg, double zeta, int r) {
    FittedReplicate out;
    out.p = std::lround(zeta * static_cast<double>(cfg.n));
    const auto beta0 = beta0_vector(out.p, cfg.S);
    const std::uint64_t seed = cfg.seed ^ static_cast<std::uint64_t>(r);
    check(coxrs_dataset_generate(cfg.n, out.p, beta0.data(), cfg.hazard,
                                 COXRS_CENSORING_UNIFORM, cfg.t_max, seed, &out.data.p));
    check(coxrs_cox_fit(out.data.p, 0, 0.0, &out.fit.p));
    if (coxrs_fit_separation_detected(out.fit.p))
        throw std::runtime_error("separation detected");
    if (!coxrs_fit_converged(out.fit.p))
        throw std::runtime_error("partial-likelihood maximizer did not converge");
    check(coxrs_overfit_markers(out.fit.p, out.data.p, beta0.data(), &out.kappa_hat,
                                &out.v_hat, &out.second_moment));
    return out;
}

RSHandle rs_solve_for(const ExperimentConfig& cfg, double zeta) {
    RSHandle rs;
    check(coxrs_rs_solve(zeta, cfg.S, cfg.hazard, COXRS_CENSORING_UNIFORM, cfg.t_max,
                         cfg.m, cfg.seed, cfg.damping, cfg.tol, cfg.max_sweeps, &rs.p));
    return rs;
}

DebiasHandle debias_for(const ExperimentConfig& cfg, const FittedReplicate& rep) {
    DebiasHandle d;
    check(coxrs_debias(rep.data.p, rep.fit.p, cfg.s_lo, cfg.s_hi, cfg.s_tol,
                       cfg.y_order, cfg.z_order, cfg.damping, cfg.tol, cfg.max_sweeps,
                       &d.p));
    return d;
}

int run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<FileRecord> files;
    std::vector<ReplicateFailure> failures;
    std::vector<SummaryRow> summary;

    const bool fig1 = cfg.scenario == "figure1_cumhaz";
    const bool fig2 = cfg.scenario == "figure2_overlaps" || cfg.scenario == "custom";
    const bool fig3 = cfg.scenario == "figure3_debias_cumhaz";
    const bool fig4 = cfg.scenario == "figure4_S_hist";
    const bool fig56 = cfg.scenario == "figure56_beta_hist";
    const bool want_debias = cfg.run_debias || fig3 || fig4 || fig56;

    {
        CsvWriter reps(out_dir, files, "replicates.csv",
                       "zeta,replicate,kappa_hat,v_hat,second_moment" +
                           std::string(want_debias ? ",S_star,kappa_star,v_star,predicted_sd"
                                                   : ""));
        for (double zeta : cfg.zeta) {
            const std::string tag = zeta_tag(zeta);

            // Scenario-specific per-zeta outputs.
            std::unique_ptr<CsvWriter> staircase;
            if (fig1)
                staircase = std::make_unique<CsvWriter>(
                    out_dir, files, "figure1_sim_zeta" + tag + ".csv",
                    "replicate,Lambda0,LambdaBreslow");
            std::unique_ptr<CsvWriter> fig3_rows;
            if (fig3)
                fig3_rows = std::make_unique<CsvWriter>(
                    out_dir, files, "figure3_cumhaz_zeta" + tag + ".csv",
                    "replicate,t,Lambda0,LambdaBreslow,LambdaTilde,LambdaBreslowRescaled");
            std::unique_ptr<CsvWriter> fig56_rows;
            if (fig56)
                fig56_rows = std::make_unique<CsvWriter>(
                    out_dir, files, "figure56_components_zeta" + tag + ".csv",
                    "replicate,component,beta0,beta_hat,beta_tilde");

            if (fig1 || fig2) {
                RSHandle rs = rs_solve_for(cfg, zeta);
                double u, v, w, kappa;
                check(coxrs_rs_values(rs.p, &u, &v, &w, &kappa));
                if (fig1) {
                    const long k = coxrs_rs_curve_size(rs.p);
                    std::vector<double> t(k), l0(k), lrs(k);
                    check(coxrs_rs_curve(rs.p, t.data(), l0.data(), lrs.data()));
                    CsvWriter theory(out_dir, files, "figure1_theory_zeta" + tag + ".csv",
                                     "Lambda0,LambdaRS");
                    for (long i = 0; i < k; ++i)
                        theory.row({fmt(l0[i]), fmt(lrs[i])});
                }
                summary.push_back({"zeta" + tag + ".kappa_star", {kappa}});
                summary.push_back({"zeta" + tag + ".v_star", {v}});
            }

            std::vector<double> kappas, vs, s_stars, first_components, zero_components;
            for (int r = 0; r < cfg.replicates; ++r) {
                try {
                    FittedReplicate rep = run_replicate(cfg, zeta, r);
                    std::vector<std::string> cells = {fmt(zeta), std::to_string(r),
                                                      fmt(rep.kappa_hat), fmt(rep.v_hat),
                                                      fmt(rep.second_moment)};
                    kappas.push_back(rep.kappa_hat);
                    vs.push_back(rep.v_hat);

                    if (staircase) {
                        const Step bres = fit_breslow(rep.fit.p);
                        for (std::size_t i = 0; i < bres.t.size(); ++i)
                            staircase->row({std::to_string(r),
                                            fmt(base_cumhaz(cfg.hazard, bres.t[i])),
                                            fmt(bres.v[i])});
                    }

                    if (want_debias) {
                        DebiasHandle d = debias_for(cfg, rep);
                        double S_star, u, v, w, kappa, sd;
                        int edge;
                        check(coxrs_debias_values(d.p, &S_star, &u, &v, &w, &kappa, &sd,
                                                  &edge));
                        cells.insert(cells.end(),
                                     {fmt(S_star), fmt(kappa), fmt(v), fmt(sd)});
                        s_stars.push_back(S_star);

                        if (fig3_rows) {
                            const Step bres = fit_breslow(rep.fit.p);
                            Step tilde;
                            const long k = coxrs_debias_lambda_tilde_size(d.p);
                            tilde.t.resize(k);
                            tilde.v.resize(k);
                            check(coxrs_debias_lambda_tilde(d.p, tilde.t.data(),
                                                            tilde.v.data()));
                            for (long i = 0; i < k; ++i)
                                fig3_rows->row(
                                    {std::to_string(r), fmt(tilde.t[i]),
                                     fmt(base_cumhaz(cfg.hazard, tilde.t[i])),
                                     fmt(bres.eval(tilde.t[i])), fmt(tilde.v[i]),
                                     fmt(bres.eval(tilde.t[i]) / kappa)});
                        }
                        if (fig56_rows || fig4) {
                            std::vector<double> beta_tilde(rep.p), beta_hat(rep.p);
                            check(coxrs_debias_beta_tilde(d.p, beta_tilde.data()));
                            check(coxrs_fit_beta(rep.fit.p, beta_hat.data()));
                            if (!beta_tilde.empty()) {
                                first_components.push_back(beta_tilde[0]);
                                if (rep.p > 1) zero_components.push_back(beta_tilde[1]);
                            }
                            if (fig56_rows) {
                                const auto b0 = beta0_vector(rep.p, cfg.S);
                                for (long j = 0; j < rep.p; ++j)
                                    fig56_rows->row({std::to_string(r),
                                                     std::to_string(j + 1), fmt(b0[j]),
                                                     fmt(beta_hat[j]),
                                                     fmt(beta_tilde[j])});
                            }
                        }
                    }
                    reps.row(cells);
                } catch (const std::exception& e) {
                    failures.push_back({zeta, r, e.what()});
                }
            }

            append_summary(summary, "zeta" + tag + ".kappa_hat", kappas);
            append_summary(summary, "zeta" + tag + ".v_hat", vs);
            if (want_debias) {
                append_summary(summary, "zeta" + tag + ".S_star", s_stars);
                if (!first_components.empty())
                    append_summary(summary, "zeta" + tag + ".beta_tilde_signal",
                                   first_components);
                if (!zero_components.empty())
                    append_summary(summary, "zeta" + tag + ".beta_tilde_null",
                                   zero_components);
            }
            if (fig4 && !s_stars.empty()) {
                // Histogram with bin width 0.1, bins [k/10, (k+1)/10).
                std::map<long, long> counts;
                for (double s : s_stars) counts[static_cast<long>(std::floor(s * 10.0))]++;
                CsvWriter hist(out_dir, files, "figure4_hist_zeta" + tag + ".csv",
                               "bin_lo,bin_hi,count");
                for (const auto& [k, c] : counts)
                    hist.row({fmt(k / 10.0), fmt((k + 1) / 10.0), std::to_string(c)});
            }
        }
    }

    {
        CsvWriter sum(out_dir, files, "summary.csv", "label,count,mean,sd,se");
        for (const auto& row : summary) {
            if (row.values.size() == 1) {
                sum.row({row.label, "1", fmt(row.values[0]), "0", "0"});
            } else {
                sum.row({row.label, fmt(row.values[0]), fmt(row.values[1]),
                         fmt(row.values[2]), fmt(row.values[3])});
            }
        }
    }

    json manifest;
    manifest["config"] = cfg.echo();
    manifest["files"] = json::array();
    for (const auto& f : files) manifest["files"].push_back({{"name", f.name}, {"rows", f.rows}});
    manifest["failed_replicates"] = json::array();
    for (const auto& f : failures)
        manifest["failed_replicates"].push_back(
            {{"zeta", f.zeta}, {"replicate", f.replicate}, {"error", f.what}});
    std::ofstream mf(out_dir / "manifest.json");
    if (!mf) throw std::runtime_error("cannot write manifest.json");
    mf << manifest.dump(2) << "\n";

    const long total = static_cast<long>(cfg.zeta.size()) * cfg.replicates;
    if (!failures.empty() && static_cast<long>(failures.size()) == total) return 1;
    return failures.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cox regression overfitting: simulation, RS theory, de-biasing"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string out_dir = ".";
    int threads = 1;
    bool paper_scale = false;
    app.add_option("--seed", seed, "base RNG seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "reserved; execution is serial");
    app.add_flag("--paper-scale", paper_scale,
                 "full-scale replicate counts and population sizes");

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a censored survival dataset");
    long sim_n = 400, sim_p = 120;
    double sim_S = 1.0, sim_tmax = 4.0;
    std::string sim_hazard = "log_logistic";
    bool sim_no_censoring = false;
    sim->add_option("--n", sim_n, "subjects");
    sim->add_option("--p", sim_p, "covariates");
    sim->add_option("--S", sim_S, "signal strength; beta0 = S e_1");
    sim->add_option("--hazard", sim_hazard, "log_logistic or weibull");
    sim->add_option("--t-max", sim_tmax, "uniform censoring horizon");
    sim->add_flag("--no-censoring", sim_no_censoring, "disable censoring");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Cox maximum partial likelihood");
    std::string fit_data;
    fit_cmd->add_option("--data", fit_data, "dataset CSV")->required();

    // rs-solve
    auto* rs_cmd = app.add_subcommand("rs-solve", "replica-symmetric order parameters");
    double rs_zeta = 0.3, rs_S = 1.0, rs_tmax = 4.0, rs_damping = 0.5, rs_tol = 1e-6;
    std::string rs_hazard = "log_logistic";
    std::uint64_t rs_m = 100000;
    int rs_sweeps = 500;
    rs_cmd->add_option("--zeta", rs_zeta, "p/n ratio in (0,1)")->required();
    rs_cmd->add_option("--S", rs_S, "signal strength");
    rs_cmd->add_option("--hazard", rs_hazard, "log_logistic or weibull");
    rs_cmd->add_option("--t-max", rs_tmax, "uniform censoring horizon");
    rs_cmd->add_option("--m", rs_m, "population size");
    rs_cmd->add_option("--damping", rs_damping, "fixed-point damping in (0,1]");
    rs_cmd->add_option("--tol", rs_tol, "relative convergence tolerance");
    rs_cmd->add_option("--max-sweeps", rs_sweeps, "sweep limit");

    // debias
    auto* db_cmd = app.add_subcommand("debias", "self-consistent overfitting removal");
    std::string db_data, db_beta0;
    double db_slo = 0.05, db_shi = 5.0, db_stol = 1e-3, db_damping = 0.5, db_tol = 1e-6;
    int db_y = 16, db_z = 12, db_sweeps = 500;
    db_cmd->add_option("--data", db_data, "dataset CSV")->required();
    db_cmd->add_option("--beta0", db_beta0,
                       "known coefficients CSV for evaluation-only diagnostics");
    db_cmd->add_option("--s-lo", db_slo, "lower end of the S bracket");
    db_cmd->add_option("--s-hi", db_shi, "upper end of the S bracket");
    db_cmd->add_option("--s-tol", db_stol, "bracket width tolerance on S");
    db_cmd->add_option("--y-order", db_y, "Gauss-Hermite order, frailty direction");
    db_cmd->add_option("--z-order", db_z, "Gauss-Hermite order, noise direction");
    db_cmd->add_option("--damping", db_damping, "inner solver damping");
    db_cmd->add_option("--tol", db_tol, "inner solver tolerance");
    db_cmd->add_option("--max-sweeps", db_sweeps, "inner solver sweep limit");

    // experiment
    auto* exp_cmd = app.add_subcommand("experiment", "config-driven replicate studies");
    std::string exp_scenario = "custom", exp_config;
    long exp_n = -1;
    int exp_reps = -1;
    std::string exp_zeta, exp_hazard;
    exp_cmd->add_option("--scenario", exp_scenario,
                        "figure1_cumhaz, figure2_overlaps, figure3_debias_cumhaz, "
                        "figure4_S_hist, figure56_beta_hist, or custom");
    exp_cmd->add_option("--config", exp_config, "flat key=value config file");
    exp_cmd->add_option("--n", exp_n, "override subjects per replicate");
    exp_cmd->add_option("--replicates", exp_reps, "override replicate count");
    exp_cmd->add_option("--zeta", exp_zeta, "override zeta grid, comma separated");
    exp_cmd->add_option("--hazard", exp_hazard, "override hazard kind");

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path out(out_dir);

        if (*sim) {
            fs::create_directories(out);
            const auto beta0 = beta0_vector(sim_p, sim_S);
            DatasetHandle data;
            check(coxrs_dataset_generate(
                sim_n, sim_p, beta0.data(), parse_hazard(sim_hazard),
                sim_no_censoring ? COXRS_CENSORING_NONE : COXRS_CENSORING_UNIFORM,
                sim_tmax, seed, &data.p));
            check(coxrs_dataset_save_csv(data.p, (out / "dataset.csv").c_str(),
                                         (out / "dataset_meta.json").c_str()));
            double frac;
            check(coxrs_dataset_event_fraction(data.p, &frac));
            std::printf("n=%ld p=%ld event_fraction=%s\n", sim_n, sim_p,
                        fmt(frac).c_str());
            return 0;
        }

        if (*fit_cmd) {
            fs::create_directories(out);
            DatasetHandle data;
            check(coxrs_dataset_load_csv(fit_data.c_str(), &data.p));
            FitHandle fit;
            check(coxrs_cox_fit(data.p, 0, 0.0, &fit.p));
            std::vector<double> beta(coxrs_dataset_p(data.p));
            check(coxrs_fit_beta(fit.p, beta.data()));
            write_vector_csv(out / "beta_hat.csv", beta, "beta_hat");
            write_step_csv(out / "breslow.csv", fit_breslow(fit.p), "time,cumhaz");
            if (coxrs_fit_separation_detected(fit.p)) {
                std::fprintf(stderr, "separation detected: estimates diverged\n");
                return 1;
            }
            std::printf("converged=%d iterations=%d\n", coxrs_fit_converged(fit.p),
                        coxrs_fit_iterations(fit.p));
            return coxrs_fit_converged(fit.p) ? 0 : 1;
        }

        if (*rs_cmd) {
            fs::create_directories(out);
            if (paper_scale) rs_m = std::max<std::uint64_t>(rs_m, 1000000);
            RSHandle rs;
            check(coxrs_rs_solve(rs_zeta, rs_S, parse_hazard(rs_hazard),
                                 COXRS_CENSORING_UNIFORM, rs_tmax, rs_m, seed,
                                 rs_damping, rs_tol, rs_sweeps, &rs.p));
            double u, v, w, kappa, residual;
            check(coxrs_rs_values(rs.p, &u, &v, &w, &kappa));
            check(coxrs_rs_residual(rs.p, &residual));
            json j = {{"zeta", rs_zeta},   {"S", rs_S},
                      {"u", u},            {"v", v},
                      {"w", w},            {"kappa", kappa},
                      {"converged", coxrs_rs_converged(rs.p) == 1},
                      {"max_residual", residual}};
            std::ofstream jf(out / "rs_solution.json");
            jf << j.dump(2) << "\n";
            const long k = coxrs_rs_curve_size(rs.p);
            std::vector<double> t(k), l0(k), lrs(k);
            check(coxrs_rs_curve(rs.p, t.data(), l0.data(), lrs.data()));
            std::ofstream cf(out / "rs_lambda.csv");
            cf << "t,Lambda0,LambdaRS\n";
            for (long i = 0; i < k; ++i)
                cf << fmt(t[i]) << "," << fmt(l0[i]) << "," << fmt(lrs[i]) << "\n";
            std::printf("u=%s v=%s w=%s kappa=%s converged=%d\n", fmt(u).c_str(),
                        fmt(v).c_str(), fmt(w).c_str(), fmt(kappa).c_str(),
                        coxrs_rs_converged(rs.p));
            return coxrs_rs_converged(rs.p) == 1 ? 0 : 1;
        }

        if (*db_cmd) {
            fs::create_directories(out);
            DatasetHandle data;
            check(coxrs_dataset_load_csv(db_data.c_str(), &data.p));
            FitHandle fit;
            check(coxrs_cox_fit(data.p, 0, 0.0, &fit.p));
            if (coxrs_fit_separation_detected(fit.p)) {
                std::fprintf(stderr, "separation detected: cannot de-bias\n");
                return 1;
            }
            DebiasHandle d;
            check(coxrs_debias(data.p, fit.p, db_slo, db_shi, db_stol, db_y, db_z,
                               db_damping, db_tol, db_sweeps, &d.p));
            double S_star, u, v, w, kappa, sd;
            int edge;
            check(coxrs_debias_values(d.p, &S_star, &u, &v, &w, &kappa, &sd, &edge));

            json j = {{"S_star", S_star},       {"u", u},
                      {"v", v},                 {"w", w},
                      {"kappa_star", kappa},    {"predicted_sd", sd},
                      {"s_at_lower_edge", edge == 1}};
            const long tn = coxrs_debias_trace_size(d.p);
            std::vector<double> ts(tn), tr(tn);
            check(coxrs_debias_trace(d.p, ts.data(), tr.data()));
            j["trace"] = json::array();
            for (long i = 0; i < tn; ++i)
                j["trace"].push_back({{"S", ts[i]}, {"residual", tr[i]}});

            if (!db_beta0.empty()) {
                std::ifstream bf(db_beta0);
                if (!bf) throw std::runtime_error("cannot open " + db_beta0);
                std::vector<double> b0;
                std::string line;
                std::getline(bf, line);  // header
                while (std::getline(bf, line))
                    if (!line.empty()) b0.push_back(std::stod(line));
                if (static_cast<long>(b0.size()) != coxrs_dataset_p(data.p))
                    throw std::runtime_error("beta0 length does not match dataset");
                double kh, vh, sm;
                check(coxrs_overfit_markers(fit.p, data.p, b0.data(), &kh, &vh, &sm));
                j["diagnostics"] = {{"kappa_hat", kh}, {"v_hat", vh},
                                    {"second_moment", sm}};
            }
            std::ofstream jf(out / "debias.json");
            jf << j.dump(2) << "\n";

            std::vector<double> beta_tilde(coxrs_dataset_p(data.p));
            check(coxrs_debias_beta_tilde(d.p, beta_tilde.data()));
            write_vector_csv(out / "beta_tilde.csv", beta_tilde, "beta_tilde");
            Step lt, lc;
            lt.t.resize(coxrs_debias_lambda_tilde_size(d.p));
            lt.v.resize(lt.t.size());
            check(coxrs_debias_lambda_tilde(d.p, lt.t.data(), lt.v.data()));
            write_step_csv(out / "lambda_tilde.csv", lt, "time,cumhaz");
            lc.t.resize(coxrs_debias_lambda_c_size(d.p));
            lc.v.resize(lc.t.size());
            check(coxrs_debias_lambda_c(d.p, lc.t.data(), lc.v.data()));
            write_step_csv(out / "lambda_c.csv", lc, "time,cumhaz");
            std::printf("S_star=%s kappa_star=%s predicted_sd=%s\n", fmt(S_star).c_str(),
                        fmt(kappa).c_str(), fmt(sd).c_str());
            return 0;
        }

        if (*exp_cmd) {
            ExperimentConfig cfg;
            cfg.seed = seed;
            cfg.scenario = exp_scenario;
            scenario_defaults(cfg);
            if (!exp_config.empty()) {
                apply_config_file(cfg, exp_config);
                scenario_defaults(cfg);  // config may change the scenario
                apply_config_file(cfg, exp_config);  // its explicit keys win
            }
            if (exp_n > 0) cfg.n = exp_n;
            if (exp_reps > 0) cfg.replicates = exp_reps;
            if (!exp_zeta.empty()) cfg.zeta = parse_grid(exp_zeta);
            if (!exp_hazard.empty()) cfg.hazard = parse_hazard(exp_hazard);
            if (paper_scale) {
                cfg.replicates = std::max(cfg.replicates, 500);
                cfg.m = std::max<std::uint64_t>(cfg.m, 1000000);
            }
            if (app.count("--seed")) cfg.seed = seed;
            if (cfg.replicates < 1) throw std::runtime_error("replicates must be >= 1");
            for (double z : cfg.zeta)
                if (!(z > 0.0 && z < 1.0))
                    throw std::runtime_error("zeta values must lie in (0,1)");
            return run_experiment(cfg, out);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
