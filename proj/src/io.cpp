#include "coxrs/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace coxrs {

std::string format_double(double x) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void write_dataset_csv(const SurvivalDataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "time,event";
    for (Eigen::Index j = 0; j < data.p(); ++j) out << ",z" << (j + 1);
    out << "\n";
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << format_double(data.times(i)) << "," << static_cast<int>(data.events(i));
        for (Eigen::Index j = 0; j < data.p(); ++j)
            out << "," << format_double(data.covariates(i, j));
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

SurvivalDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);

    Eigen::Index p = -1;
    {
        std::stringstream hdr(line);
        std::string col;
        Eigen::Index cols = 0;
        while (std::getline(hdr, col, ',')) ++cols;
        if (cols < 3) throw std::runtime_error("dataset header needs time,event,z1,...: " + path);
        p = cols - 2;
    }

    std::vector<double> times, events, covs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
        if (static_cast<Eigen::Index>(vals.size()) != p + 2)
            throw std::runtime_error("ragged row in dataset: " + path);
        times.push_back(vals[0]);
        events.push_back(vals[1]);
        covs.insert(covs.end(), vals.begin() + 2, vals.end());
    }
    const Eigen::Index n = static_cast<Eigen::Index>(times.size());
    if (n == 0) throw std::runtime_error("dataset has no rows: " + path);

    SurvivalDataset data;
    data.times = Eigen::Map<Eigen::VectorXd>(times.data(), n);
    data.events = Eigen::Map<Eigen::VectorXd>(events.data(), n);
    data.covariates =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            covs.data(), n, p);
    return data;
}

void write_dataset_meta(const SurvivalDataset& data, const std::string& path) {
    nlohmann::json j;
    j["n"] = data.n();
    j["p"] = data.p();
    if (data.meta) {
        const GenerationMeta& m = *data.meta;
        j["seed"] = m.seed;
        j["signal_strength"] = m.signal_strength;
        j["beta0"] = std::vector<double>(m.beta0.data(), m.beta0.data() + m.beta0.size());
        switch (m.hazard_kind) {
            case HazardKind::log_logistic: j["hazard"] = "log_logistic"; break;
            case HazardKind::weibull_like: j["hazard"] = "weibull_like"; break;
            case HazardKind::empirical_step: j["hazard"] = "empirical_step"; break;
        }
        switch (m.censoring_kind) {
            case CensoringKind::uniform_interval:
                j["censoring"] = "uniform_interval";
                j["t_max"] = m.t_max;
                break;
            case CensoringKind::none: j["censoring"] = "none"; break;
            case CensoringKind::empirical_step: j["censoring"] = "empirical_step"; break;
        }
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace coxrs
