#include "tscausal/forecaster.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace tscausal {

namespace {

struct Gradients {
    Eigen::MatrixXd w1;
    Eigen::VectorXd b1;
    Eigen::VectorXd w2;
    double b2 = 0.0;
};

/// Mean squared error over the batch; fills gradients when requested.
double batch_loss(const TargetNet& net, const Eigen::MatrixXd& xb, const Eigen::VectorXd& y,
                  Gradients* grads) {
    const double inv_b = 1.0 / static_cast<double>(xb.rows());
    const Eigen::MatrixXd h =
        ((xb * net.w1.transpose()).rowwise() + net.b1.transpose()).array().tanh();
    const Eigen::VectorXd err = (h * net.w2).array() + net.b2 - y.array();
    const double loss = err.squaredNorm() * inv_b;
    if (grads) {
        const Eigen::VectorXd dy = 2.0 * inv_b * err;
        grads->w2 = h.transpose() * dy;
        grads->b2 = dy.sum();
        const Eigen::MatrixXd dh =
            (dy * net.w2.transpose()).array() * (1.0 - h.array().square());
        grads->w1 = dh.transpose() * xb;
        grads->b1 = dh.colwise().sum();
    }
    return loss;
}

struct AdamState {
    Eigen::ArrayXXd m, v;

    explicit AdamState(long rows, long cols)
        : m(Eigen::ArrayXXd::Zero(rows, cols)), v(Eigen::ArrayXXd::Zero(rows, cols)) {}

    void apply(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::MatrixXd& grad, double lr, int step) {
        constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        m = b1 * m + (1.0 - b1) * grad.array();
        v = b2 * v + (1.0 - b2) * grad.array().square();
        const double c1 = 1.0 - std::pow(b1, step);
        const double c2 = 1.0 - std::pow(b2, step);
        param.array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
    }
};

double init_weight(std::uint64_t seed, const std::string& label, double scale) {
    RngStream stream(seed, label);
    return scale * stream.normal();
}

TargetNet init_net(const ForecastConfig& config, const std::vector<std::string>& names,
                   const std::string& target_name) {
    const int n = static_cast<int>(names.size());
    const int in = config.lag_depth * n;
    TargetNet net;
    net.w1.resize(config.hidden, in);
    net.b1 = Eigen::VectorXd::Zero(config.hidden);
    net.w2.resize(config.hidden);
    const double scale1 = 1.0 / std::sqrt(static_cast<double>(in));
    const double scale2 = 1.0 / std::sqrt(static_cast<double>(config.hidden));
    for (int h = 0; h < config.hidden; ++h) {
        for (int lag = 1; lag <= config.lag_depth; ++lag) {
            for (int v = 0; v < n; ++v) {
                const std::string label = "forecaster-init-w1-" + target_name + "-" +
                                          std::to_string(lag) + "-" + std::to_string(h) + "-" +
                                          names[static_cast<std::size_t>(v)];
                net.w1(h, (lag - 1) * n + v) = init_weight(config.seed, label, scale1);
            }
        }
        net.w2(h) = init_weight(
            config.seed, "forecaster-init-w2-" + target_name + "-" + std::to_string(h), scale2);
    }
    return net;
}

/// Lag windows over a standardized segment: row k describes time fc-relative
/// index lag_depth + k, feature (lag-1)*n + v holds variable v at that lag.
Eigen::MatrixXd build_windows(const Eigen::MatrixXd& seg, int lag_depth) {
    const long rows = seg.rows() - lag_depth;
    const long n = seg.cols();
    Eigen::MatrixXd out(rows, lag_depth * n);
    for (int lag = 1; lag <= lag_depth; ++lag)
        out.middleCols(static_cast<long>(lag - 1) * n, n) =
            seg.middleRows(lag_depth - lag, rows);
    return out;
}

void check_segment(const ForecastModel& model, const TimeSeries& series, long fc_begin,
                   long fc_end) {
    if (series.cols() != model.dim())
        throw std::invalid_argument("series dimension does not match model");
    if (fc_begin < 0 || fc_end > series.rows())
        throw std::invalid_argument("forecast segment bounds outside the series");
    if (fc_end - fc_begin <= model.config.lag_depth)
        throw std::invalid_argument("forecast segment shorter than the lag depth plus one row");
}

Eigen::VectorXd net_predictions(const ForecastModel& model, const Eigen::MatrixXd& windows,
                                int target) {
    if (model.standardization.constant[static_cast<std::size_t>(target)])
        return Eigen::VectorXd::Zero(windows.rows());
    const TargetNet& net = model.nets[static_cast<std::size_t>(target)];
    return (((windows * net.w1.transpose()).rowwise() + net.b1.transpose()).array().tanh().matrix() *
            net.w2)
               .array() +
           net.b2;
}

void write_array(std::ostream& out, const std::string& key, const double* data, long count) {
    out << key << '=';
    for (long i = 0; i < count; ++i) {
        if (i > 0) out << ' ';
        out << std::setprecision(17) << data[i];
    }
    out << '\n';
}

std::vector<double> parse_array(const std::string& text) {
    std::istringstream in(text);
    std::vector<double> out;
    double value = 0.0;
    while (in >> value) out.push_back(value);
    return out;
}

const std::string& require(const std::unordered_map<std::string, std::string>& kv,
                           const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("model file is missing key '" + key + "'");
    return it->second;
}

}  // namespace

double ForecastModel::final_rmse(int target) const {
    const auto& trace = nets[static_cast<std::size_t>(target)].loss_trace;
    return trace.empty() ? 0.0 : std::sqrt(trace.back());
}

ForecastModel fit(const TimeSeries& train, const ForecastConfig& config) {
    if (config.lag_depth < 1) throw std::invalid_argument("lag depth must be at least 1");
    if (config.hidden < 1 || config.batch < 1 || config.epochs < 0)
        throw std::invalid_argument("invalid network configuration");
    const long r = train.rows();
    const long n = train.cols();
    if (r <= config.lag_depth + config.batch)
        throw std::invalid_argument("training segment must be longer than lag depth plus batch size");

    ForecastModel model;
    model.config = config;
    model.standardization = fit_standardization(train.values);
    model.names = train.names;

    const Eigen::MatrixXd x = standardize_matrix(train.values, model.standardization);
    const Eigen::MatrixXd windows = build_windows(x, config.lag_depth);
    const long n_win = windows.rows();

    for (long j = 0; j < n; ++j) {
        const std::string& target_name = train.names[static_cast<std::size_t>(j)];
        TargetNet net = init_net(config, train.names, target_name);
        net.loss_trace.reserve(static_cast<std::size_t>(config.epochs));

        if (model.standardization.constant[static_cast<std::size_t>(j)]) {
            net.w1.setZero();
            net.w2.setZero();
            net.loss_trace.assign(static_cast<std::size_t>(config.epochs), 0.0);
            model.nets.push_back(std::move(net));
            continue;
        }

        const Eigen::VectorXd y = x.col(j).tail(n_win);
        RngStream batches(config.seed, "forecaster-batches-" + target_name);
        AdamState mw1(net.w1.rows(), net.w1.cols());
        AdamState mb1(net.b1.size(), 1);
        AdamState mw2(net.w2.size(), 1);
        AdamState mb2(1, 1);
        int step = 0;

        std::vector<long> order(static_cast<std::size_t>(n_win));
        for (long k = 0; k < n_win; ++k) order[static_cast<std::size_t>(k)] = k;

        for (int epoch = 0; epoch < config.epochs; ++epoch) {
            for (long k = n_win - 1; k > 0; --k)
                std::swap(order[static_cast<std::size_t>(k)],
                          order[static_cast<std::size_t>(batches.uniform_int(0, k))]);

            double sq_sum = 0.0;
            for (long start = 0; start < n_win; start += config.batch) {
                const long b = std::min<long>(config.batch, n_win - start);
                Eigen::MatrixXd xb(b, windows.cols());
                Eigen::VectorXd yb(b);
                for (long k = 0; k < b; ++k) {
                    const long row = order[static_cast<std::size_t>(start + k)];
                    xb.row(k) = windows.row(row);
                    yb(k) = y(row);
                }

                Gradients grads;
                const double loss = batch_loss(net, xb, yb, &grads);
                if (!std::isfinite(loss))
                    throw std::runtime_error("training loss became non-finite for target '" +
                                             target_name + "'");
                sq_sum += loss * static_cast<double>(b);

                ++step;
                mw1.apply(net.w1, grads.w1, config.learning_rate, step);
                Eigen::Ref<Eigen::MatrixXd> b1_ref(net.b1);
                mb1.apply(b1_ref, grads.b1, config.learning_rate, step);
                Eigen::Ref<Eigen::MatrixXd> w2_ref(net.w2);
                mw2.apply(w2_ref, grads.w2, config.learning_rate, step);
                Eigen::MatrixXd b2m(1, 1), gb2(1, 1);
                b2m(0, 0) = net.b2;
                gb2(0, 0) = grads.b2;
                Eigen::Ref<Eigen::MatrixXd> b2_ref(b2m);
                mb2.apply(b2_ref, gb2, config.learning_rate, step);
                net.b2 = b2m(0, 0);
            }
            net.loss_trace.push_back(sq_sum / static_cast<double>(n_win));
        }
        model.nets.push_back(std::move(net));
    }
    return model;
}

Eigen::MatrixXd predict(const ForecastModel& model, const TimeSeries& series, long fc_begin,
                        long fc_end) {
    check_segment(model, series, fc_begin, fc_end);
    const long n = series.cols();
    const Eigen::MatrixXd seg = standardize_matrix(
        series.values.middleRows(fc_begin, fc_end - fc_begin), model.standardization);
    const Eigen::MatrixXd windows = build_windows(seg, model.config.lag_depth);
    Eigen::MatrixXd out(windows.rows(), n);
    for (long j = 0; j < n; ++j)
        out.col(j) = net_predictions(model, windows, static_cast<int>(j)).array() *
                         model.standardization.sd(j) +
                     model.standardization.mean(j);
    return out;
}

ResidualSeries target_residuals(const ForecastModel& model, const TimeSeries& series, long fc_begin,
                                long fc_end, int target,
                                const std::optional<Substitution>& substitution) {
    check_segment(model, series, fc_begin, fc_end);
    if (target < 0 || target >= model.dim()) throw std::invalid_argument("target index out of range");

    Eigen::MatrixXd seg = standardize_matrix(series.values.middleRows(fc_begin, fc_end - fc_begin),
                                             model.standardization);
    ResidualSeries out;
    out.target = target;
    if (substitution) {
        const int i = substitution->variable;
        if (i < 0 || i >= model.dim())
            throw std::invalid_argument("substituted variable index out of range");
        if (i == target)
            throw std::invalid_argument("cannot substitute the target's own history");
        if (substitution->replacement.size() != seg.rows())
            throw std::invalid_argument("replacement length does not match the forecast segment");
        seg.col(i) = (substitution->replacement.array() - model.standardization.mean(i)) /
                     model.standardization.sd(i);
        out.intervened_variable = i;
        out.intervention = substitution->kind;
    }

    const Eigen::MatrixXd windows = build_windows(seg, model.config.lag_depth);
    const Eigen::VectorXd actual = seg.col(target).tail(windows.rows());
    out.residuals = (actual - net_predictions(model, windows, target)) *
                    model.standardization.sd(target);
    return out;
}

std::vector<ResidualSeries> residuals(const ForecastModel& model, const TimeSeries& series,
                                      long fc_begin, long fc_end,
                                      const std::optional<Substitution>& substitution) {
    std::vector<ResidualSeries> out;
    for (int j = 0; j < model.dim(); ++j) {
        if (substitution && substitution->variable == j) continue;
        out.push_back(target_residuals(model, series, fc_begin, fc_end, j, substitution));
    }
    return out;
}

void save_model(const ForecastModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << "format=tscausal-forecaster-1\n";
    out << "n=" << model.dim() << '\n';
    out << "lag_depth=" << model.config.lag_depth << '\n';
    out << "hidden=" << model.config.hidden << '\n';
    out << "epochs=" << model.config.epochs << '\n';
    out << "learning_rate=" << std::setprecision(17) << model.config.learning_rate << '\n';
    out << "batch=" << model.config.batch << '\n';
    out << "seed=" << model.config.seed << '\n';
    out << "names=";
    for (int j = 0; j < model.dim(); ++j) {
        if (j > 0) out << ',';
        out << model.names[static_cast<std::size_t>(j)];
    }
    out << '\n';
    write_array(out, "mean", model.standardization.mean.data(), model.standardization.mean.size());
    write_array(out, "sd", model.standardization.sd.data(), model.standardization.sd.size());
    out << "constant=";
    for (std::size_t c = 0; c < model.standardization.constant.size(); ++c) {
        if (c > 0) out << ' ';
        out << static_cast<int>(model.standardization.constant[c]);
    }
    out << '\n';
    for (int j = 0; j < model.dim(); ++j) {
        const TargetNet& net = model.nets[static_cast<std::size_t>(j)];
        const std::string prefix = "net." + std::to_string(j) + ".";
        write_array(out, prefix + "w1", net.w1.data(), net.w1.size());
        write_array(out, prefix + "b1", net.b1.data(), net.b1.size());
        write_array(out, prefix + "w2", net.w2.data(), net.w2.size());
        write_array(out, prefix + "b2", &net.b2, 1);
        write_array(out, prefix + "loss", net.loss_trace.data(),
                    static_cast<long>(net.loss_trace.size()));
    }
    if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

ForecastModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    std::unordered_map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("malformed model line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (require(kv, "format") != "tscausal-forecaster-1")
        throw std::runtime_error("unrecognized model format");

    ForecastModel model;
    const int n = std::stoi(require(kv, "n"));
    model.config.lag_depth = std::stoi(require(kv, "lag_depth"));
    model.config.hidden = std::stoi(require(kv, "hidden"));
    model.config.epochs = std::stoi(require(kv, "epochs"));
    model.config.learning_rate = std::stod(require(kv, "learning_rate"));
    model.config.batch = std::stoi(require(kv, "batch"));
    model.config.seed = std::stoull(require(kv, "seed"));

    std::istringstream names(require(kv, "names"));
    std::string name;
    while (std::getline(names, name, ',')) model.names.push_back(name);
    if (static_cast<int>(model.names.size()) != n)
        throw std::runtime_error("model file name count does not match n");

    const std::vector<double> mean = parse_array(require(kv, "mean"));
    const std::vector<double> sd = parse_array(require(kv, "sd"));
    const std::vector<double> constant = parse_array(require(kv, "constant"));
    if (static_cast<int>(mean.size()) != n || static_cast<int>(sd.size()) != n ||
        static_cast<int>(constant.size()) != n)
        throw std::runtime_error("standardization arrays have the wrong length");
    model.standardization.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
    model.standardization.sd = Eigen::Map<const Eigen::VectorXd>(sd.data(), n);
    for (double flag : constant)
        model.standardization.constant.push_back(flag != 0.0 ? 1 : 0);

    const long in_dim = static_cast<long>(model.config.lag_depth) * n;
    for (int j = 0; j < n; ++j) {
        const std::string prefix = "net." + std::to_string(j) + ".";
        TargetNet net;
        const std::vector<double> w1 = parse_array(require(kv, prefix + "w1"));
        const std::vector<double> b1 = parse_array(require(kv, prefix + "b1"));
        const std::vector<double> w2 = parse_array(require(kv, prefix + "w2"));
        const std::vector<double> b2 = parse_array(require(kv, prefix + "b2"));
        if (static_cast<long>(w1.size()) != model.config.hidden * in_dim ||
            static_cast<int>(b1.size()) != model.config.hidden ||
            static_cast<int>(w2.size()) != model.config.hidden || b2.size() != 1)
            throw std::runtime_error("network parameter arrays have the wrong length");
        net.w1 = Eigen::Map<const Eigen::MatrixXd>(w1.data(), model.config.hidden, in_dim);
        net.b1 = Eigen::Map<const Eigen::VectorXd>(b1.data(), model.config.hidden);
        net.w2 = Eigen::Map<const Eigen::VectorXd>(w2.data(), model.config.hidden);
        net.b2 = b2[0];
        net.loss_trace = parse_array(require(kv, prefix + "loss"));
        model.nets.push_back(std::move(net));
    }
    return model;
}

double gradient_check(int n_vars, int lag_depth, int hidden, int samples, std::uint64_t seed) {
    RngStream rng(seed, "gradient-check");
    const int in = lag_depth * n_vars;
    TargetNet net;
    net.w1.resize(hidden, in);
    net.b1.resize(hidden);
    net.w2.resize(hidden);
    for (long k = 0; k < net.w1.size(); ++k) net.w1.data()[k] = 0.5 * rng.normal();
    for (int h = 0; h < hidden; ++h) net.b1(h) = 0.2 * rng.normal();
    for (int h = 0; h < hidden; ++h) net.w2(h) = 0.5 * rng.normal();
    net.b2 = 0.2 * rng.normal();

    Eigen::MatrixXd xb(samples, in);
    Eigen::VectorXd y(samples);
    for (long k = 0; k < xb.size(); ++k) xb.data()[k] = rng.normal();
    for (int k = 0; k < samples; ++k) y(k) = rng.normal();

    Gradients grads;
    batch_loss(net, xb, y, &grads);

    std::vector<double*> params;
    std::vector<double> analytic;
    for (long k = 0; k < net.w1.size(); ++k) {
        params.push_back(net.w1.data() + k);
        analytic.push_back(grads.w1.data()[k]);
    }
    for (int h = 0; h < hidden; ++h) {
        params.push_back(net.b1.data() + h);
        analytic.push_back(grads.b1(h));
    }
    for (int h = 0; h < hidden; ++h) {
        params.push_back(net.w2.data() + h);
        analytic.push_back(grads.w2(h));
    }
    params.push_back(&net.b2);
    analytic.push_back(grads.b2);

    constexpr double step = 1e-5;
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = *params[k];
        *params[k] = saved + step;
        const double up = batch_loss(net, xb, y, nullptr);
        *params[k] = saved - step;
        const double down = batch_loss(net, xb, y, nullptr);
        *params[k] = saved;
        const double fd = (up - down) / (2.0 * step);
        const double denom = std::max({1e-8, std::abs(fd), std::abs(analytic[k])});
        worst = std::max(worst, std::abs(fd - analytic[k]) / denom);
    }
    return worst;
}

}  // namespace tscausal
