#include "tscausal/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "tscausal/baseline.hpp"
#include "tscausal/forecaster.hpp"

namespace tscausal {

namespace {

const std::set<std::string>& known_methods() {
    static const std::set<std::string> methods{"knockoff", "mean", "uniform", "ood", "var-gc"};
    return methods;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string trim(const std::string& text) {
    const auto begin = text.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = text.find_last_not_of(" \t\r");
    return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void summarize(BenchmarkReport& report) {
    for (const std::string& method : report.config.methods) {
        MethodSummary summary;
        summary.method = method;
        std::vector<double> fprs, fs;
        for (const BenchCell& cell : report.cells) {
            if (cell.method != method) continue;
            summary.seconds_total += cell.seconds;
            if (!cell.ok) continue;
            ++summary.ok_count;
            fprs.push_back(cell.metrics.fpr);
            fs.push_back(cell.metrics.f_score);
        }
        auto mean = [](const std::vector<double>& v) {
            if (v.empty()) return 0.0;
            double s = 0.0;
            for (double x : v) s += x;
            return s / static_cast<double>(v.size());
        };
        auto sd = [&](const std::vector<double>& v, double m) {
            if (v.size() < 2) return 0.0;
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            return std::sqrt(s / static_cast<double>(v.size() - 1));
        };
        summary.fpr_mean = mean(fprs);
        summary.fpr_sd = sd(fprs, summary.fpr_mean);
        summary.f_mean = mean(fs);
        summary.f_sd = sd(fs, summary.f_mean);
        report.methods.push_back(std::move(summary));
    }
}

nlohmann::json metrics_to_json(const GraphMetrics& m) {
    return {{"tp", m.tp},       {"fp", m.fp},
            {"tn", m.tn},       {"fn", m.fn},
            {"fpr", m.fpr},     {"precision", m.precision},
            {"recall", m.recall}, {"f_score", m.f_score}};
}

}  // namespace

GraphMetrics score(const CausalGraph& predicted, const CausalGraph& truth) {
    if (predicted.n != truth.n) throw std::invalid_argument("graphs have different sizes");
    GraphMetrics m;
    for (int i = 0; i < predicted.n; ++i) {
        for (int j = 0; j < predicted.n; ++j) {
            if (i == j) continue;
            const bool p = predicted.at(i, j);
            const bool t = truth.at(i, j);
            if (p && t)
                ++m.tp;
            else if (p && !t)
                ++m.fp;
            else if (!p && t)
                ++m.fn;
            else
                ++m.tn;
        }
    }
    m.fpr = (m.fp + m.tn) > 0 ? static_cast<double>(m.fp) / (m.fp + m.tn) : 0.0;
    m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / (m.tp + m.fn) : 0.0;
    m.f_score = (m.precision + m.recall) > 0.0
                    ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                    : 0.0;
    return m;
}

BenchConfig default_bench_config() {
    BenchConfig config;
    config.ranges.coupling_lo = 0.8;
    config.ranges.coupling_hi = 0.8;
    config.ranges.noise_lo = 0.3;
    config.ranges.noise_hi = 0.3;
    config.ranges.linear_prob = 1.0;
    return config;
}

BenchConfig parse_bench_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    BenchConfig config = default_bench_config();
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "nodes") config.nodes = std::stoi(value);
            else if (key == "edges") config.edges = std::stoi(value);
            else if (key == "length") config.length = std::stol(value);
            else if (key == "methods") config.methods = split_list(value);
            else if (key == "seeds") {
                config.seeds.clear();
                for (const std::string& s : split_list(value)) config.seeds.push_back(std::stoull(s));
            }
            else if (key == "alpha") config.discover.alpha = std::stod(value);
            else if (key == "q") config.discover.q = std::stod(value);
            else if (key == "window") config.discover.scheme.length = std::stoi(value);
            else if (key == "step") config.discover.scheme.step = std::stoi(value);
            else if (key == "train_fraction") config.discover.train_fraction = std::stod(value);
            else if (key == "lag_depth") config.discover.forecast.lag_depth = std::stoi(value);
            else if (key == "hidden") config.discover.forecast.hidden = std::stoi(value);
            else if (key == "epochs") config.discover.forecast.epochs = std::stoi(value);
            else if (key == "learning_rate") config.discover.forecast.learning_rate = std::stod(value);
            else if (key == "batch") config.discover.forecast.batch = std::stoi(value);
            else if (key == "knockoff_components") config.discover.knockoff_components = std::stoi(value);
            else if (key == "redraws") config.discover.redraws = std::stoi(value);
            else if (key == "aggregation") {
                if (value == "vote") config.discover.aggregation = Aggregation::vote;
                else if (value == "pool") config.discover.aggregation = Aggregation::pool;
                else throw std::runtime_error("aggregation must be 'vote' or 'pool'");
            }
            else if (key == "ood_mean_shift") config.discover.kind.ood_mean_shift = std::stod(value);
            else if (key == "ood_sd_scale") config.discover.kind.ood_sd_scale = std::stod(value);
            else if (key == "var_order") config.var_order = std::stoi(value);
            else if (key == "var_alpha") config.var_alpha = std::stod(value);
            else if (key == "a_lo") config.ranges.a_lo = std::stod(value);
            else if (key == "a_hi") config.ranges.a_hi = std::stod(value);
            else if (key == "coupling_lo") config.ranges.coupling_lo = std::stod(value);
            else if (key == "coupling_hi") config.ranges.coupling_hi = std::stod(value);
            else if (key == "lag_lo") config.ranges.lag_lo = std::stoi(value);
            else if (key == "lag_hi") config.ranges.lag_hi = std::stoi(value);
            else if (key == "noise_lo") config.ranges.noise_lo = std::stod(value);
            else if (key == "noise_hi") config.ranges.noise_hi = std::stod(value);
            else if (key == "linear_prob") config.ranges.linear_prob = std::stod(value);
            else throw std::runtime_error("unknown config key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": cannot parse value '" + value + "'");
        }
    }
    return config;
}

BenchmarkReport run_benchmark(const BenchConfig& config) {
    if (config.seeds.empty()) throw std::invalid_argument("benchmark needs at least one seed");
    if (config.methods.empty()) throw std::invalid_argument("benchmark needs at least one method");
    for (const std::string& method : config.methods)
        if (!known_methods().count(method))
            throw std::invalid_argument("unknown method '" + method + "'");

    const bool wants_interventions =
        std::any_of(config.methods.begin(), config.methods.end(),
                    [](const std::string& m) { return m != "var-gc"; });
    const bool wants_knockoff =
        std::count(config.methods.begin(), config.methods.end(), "knockoff") > 0;

    BenchmarkReport report;
    report.config = config;

    for (std::uint64_t seed : config.seeds) {
        SeedPrep prep;
        prep.seed = seed;
        const auto prep_start = std::chrono::steady_clock::now();

        ScmDataset data;
        ForecastModel model;
        KnockoffModel km;
        bool have_data = false, have_model = false, have_km = false;
        try {
            data = simulate(sample_spec(config.nodes, config.edges, RngSeed{seed, "synth"},
                                        config.length, config.ranges),
                            RngSeed{seed, "synth"});
            have_data = true;
            if (wants_interventions) {
                auto [train, forecast] =
                    split_train_forecast(data.series, config.discover.train_fraction,
                                         config.discover.forecast.lag_depth,
                                         config.discover.scheme.length);
                ForecastConfig fc = config.discover.forecast;
                fc.seed = seed;
                model = fit(train, fc);
                have_model = true;
            }
            if (wants_knockoff) {
                km = config.discover.knockoff_components <= 1
                         ? fit_gaussian(data.series)
                         : fit_gmm(data.series, config.discover.knockoff_components,
                                   RngSeed{seed, "knockoff"});
                have_km = true;
            }
            prep.ok = true;
        } catch (const std::exception& e) {
            prep.error = e.what();
        }
        prep.seconds = elapsed_seconds(prep_start);
        report.preps.push_back(prep);

        for (const std::string& method : config.methods) {
            BenchCell cell;
            cell.seed = seed;
            cell.method = method;
            const auto cell_start = std::chrono::steady_clock::now();
            try {
                if (!have_data) throw std::runtime_error(prep.error);
                CausalGraph predicted;
                if (method == "var-gc") {
                    predicted = granger_graph(data.series, config.var_order, config.var_alpha).graph;
                } else {
                    if (!have_model) throw std::runtime_error(prep.error);
                    DiscoverConfig dc = config.discover;
                    dc.kind.tag = intervention_from_string(method);
                    const KnockoffModel* km_ptr = nullptr;
                    if (dc.kind.tag == InterventionTag::knockoff) {
                        if (!have_km) throw std::runtime_error(prep.error);
                        km_ptr = &km;
                    }
                    predicted = discover_with_model(model, data.series, dc, km_ptr, seed).graph;
                }
                cell.metrics = score(predicted, data.truth);
                cell.ok = true;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            cell.seconds = elapsed_seconds(cell_start);
            report.cells.push_back(std::move(cell));
        }
    }
    summarize(report);
    return report;
}

std::string benchmark_to_json(const BenchmarkReport& report, bool include_timing) {
    const BenchConfig& c = report.config;
    nlohmann::json doc;
    doc["config"] = {{"nodes", c.nodes},
                     {"edges", c.edges},
                     {"length", c.length},
                     {"methods", c.methods},
                     {"seeds", c.seeds},
                     {"alpha", c.discover.alpha},
                     {"q", c.discover.q},
                     {"window", c.discover.scheme.length},
                     {"step", c.discover.scheme.step},
                     {"train_fraction", c.discover.train_fraction},
                     {"lag_depth", c.discover.forecast.lag_depth},
                     {"hidden", c.discover.forecast.hidden},
                     {"epochs", c.discover.forecast.epochs},
                     {"learning_rate", c.discover.forecast.learning_rate},
                     {"batch", c.discover.forecast.batch},
                     {"knockoff_components", c.discover.knockoff_components},
                     {"redraws", c.discover.redraws},
                     {"aggregation",
                      c.discover.aggregation == Aggregation::vote ? "vote" : "pool"},
                     {"var_order", c.var_order},
                     {"var_alpha", c.var_alpha},
                     {"ranges",
                      {{"a_lo", c.ranges.a_lo},
                       {"a_hi", c.ranges.a_hi},
                       {"coupling_lo", c.ranges.coupling_lo},
                       {"coupling_hi", c.ranges.coupling_hi},
                       {"lag_lo", c.ranges.lag_lo},
                       {"lag_hi", c.ranges.lag_hi},
                       {"noise_lo", c.ranges.noise_lo},
                       {"noise_hi", c.ranges.noise_hi},
                       {"linear_prob", c.ranges.linear_prob}}}};

    nlohmann::json preps = nlohmann::json::array();
    for (const SeedPrep& prep : report.preps) {
        nlohmann::json p = {{"seed", prep.seed}, {"ok", prep.ok}};
        if (!prep.ok) p["error"] = prep.error;
        if (include_timing) p["seconds"] = prep.seconds;
        preps.push_back(std::move(p));
    }
    doc["preps"] = std::move(preps);

    nlohmann::json cells = nlohmann::json::array();
    for (const BenchCell& cell : report.cells) {
        nlohmann::json c_json = {{"seed", cell.seed}, {"method", cell.method}, {"ok", cell.ok}};
        if (cell.ok)
            c_json["metrics"] = metrics_to_json(cell.metrics);
        else
            c_json["error"] = cell.error;
        if (include_timing) c_json["seconds"] = cell.seconds;
        cells.push_back(std::move(c_json));
    }
    doc["cells"] = std::move(cells);

    nlohmann::json methods = nlohmann::json::array();
    for (const MethodSummary& m : report.methods) {
        nlohmann::json m_json = {{"method", m.method},   {"ok_count", m.ok_count},
                                 {"fpr_mean", m.fpr_mean}, {"fpr_sd", m.fpr_sd},
                                 {"f_mean", m.f_mean},     {"f_sd", m.f_sd}};
        if (include_timing) m_json["seconds_total"] = m.seconds_total;
        methods.push_back(std::move(m_json));
    }
    doc["methods"] = std::move(methods);
    return doc.dump(2);
}

}  // namespace tscausal
