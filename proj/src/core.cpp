#include "tscausal/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace tscausal {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<int> RngStream::sample_without_replacement(int n, int k) {
    if (k < 0 || k > n) throw std::invalid_argument("cannot draw more values than the pool holds");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        const long j = uniform_int(i, n - 1);
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

bool is_missing_token(const std::string& s) {
    if (s.empty()) return true;
    std::string lower;
    lower.reserve(s.size());
    for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower == "na" || lower == "nan";
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace

TimeSeries load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
    const std::vector<std::string> header = split_line(line);

    std::vector<std::string> raw_rows;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) raw_rows.push_back(line);
    }
    if (raw_rows.empty()) throw std::runtime_error("no data rows in " + path);

    // Decide which header columns to read.
    std::vector<int> selected;
    if (!options.columns.empty()) {
        for (const auto& want : options.columns) {
            auto it = std::find(header.begin(), header.end(), want);
            if (it == header.end()) throw std::runtime_error("column not found: " + want);
            selected.push_back(static_cast<int>(it - header.begin()));
        }
    } else {
        const std::vector<std::string> first = split_line(raw_rows.front());
        int start = 0;
        double probe = 0.0;
        if (!first.empty() && !is_missing_token(first[0]) && !parse_double(first[0], probe)) {
            start = 1;  // leading date/index column
        }
        for (int c = start; c < static_cast<int>(header.size()); ++c) selected.push_back(c);
    }
    if (selected.size() < 2) throw std::runtime_error("fewer than 2 selected columns in " + path);

    std::vector<std::vector<double>> rows;
    long dropped = 0;
    for (std::size_t r = 0; r < raw_rows.size(); ++r) {
        const std::vector<std::string> fields = split_line(raw_rows[r]);
        std::vector<double> row(selected.size());
        bool missing = false;
        for (std::size_t k = 0; k < selected.size(); ++k) {
            const int c = selected[k];
            if (c >= static_cast<int>(fields.size()) || is_missing_token(fields[c])) {
                missing = true;
                break;
            }
            if (!parse_double(fields[c], row[k])) {
                throw std::runtime_error("non-numeric cell at data row " + std::to_string(r + 1) +
                                         ", column '" + header[c] + "': " + fields[c]);
            }
        }
        if (missing) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (dropped > 0) std::cerr << "load_csv: dropped " << dropped << " rows with missing values\n";
    if (rows.size() < 2) throw std::runtime_error("fewer than 2 usable rows in " + path);

    TimeSeries out;
    out.values.resize(static_cast<long>(rows.size()), static_cast<long>(selected.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t k = 0; k < selected.size(); ++k)
            out.values(static_cast<long>(r), static_cast<long>(k)) = rows[r][k];
    for (int c : selected) out.names.push_back(header[c]);
    return out;
}

void save_csv(const TimeSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (long c = 0; c < series.cols(); ++c) {
        if (c > 0) out << ',';
        out << series.names[static_cast<std::size_t>(c)];
    }
    out << '\n';
    out << std::setprecision(17);
    for (long t = 0; t < series.rows(); ++t) {
        for (long c = 0; c < series.cols(); ++c) {
            if (c > 0) out << ',';
            out << series.values(t, c);
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

StandardizationParams fit_standardization(const Eigen::MatrixXd& values) {
    const long r = values.rows();
    const long n = values.cols();
    StandardizationParams params;
    params.mean = Eigen::VectorXd::Zero(n);
    params.sd = Eigen::VectorXd::Ones(n);
    params.constant.assign(static_cast<std::size_t>(n), 0);
    for (long c = 0; c < n; ++c) {
        const double mean = values.col(c).mean();
        const double ss = (values.col(c).array() - mean).square().sum();
        const double sd = std::sqrt(ss / static_cast<double>(r - 1));
        params.mean(c) = mean;
        if (sd < 1e-12) {
            params.constant[static_cast<std::size_t>(c)] = 1;
        } else {
            params.sd(c) = sd;
        }
    }
    return params;
}

Eigen::MatrixXd standardize_matrix(const Eigen::MatrixXd& values, const StandardizationParams& params) {
    Eigen::MatrixXd out = values;
    for (long c = 0; c < out.cols(); ++c)
        out.col(c) = (out.col(c).array() - params.mean(c)) / params.sd(c);
    return out;
}

std::pair<TimeSeries, StandardizationParams> standardize(const TimeSeries& series) {
    StandardizationParams params = fit_standardization(series.values);
    TimeSeries out = series;
    out.values = standardize_matrix(series.values, params);
    return {std::move(out), std::move(params)};
}

TimeSeries unstandardize(const TimeSeries& series, const StandardizationParams& params) {
    TimeSeries out = series;
    for (long c = 0; c < out.values.cols(); ++c)
        out.values.col(c) = out.values.col(c).array() * params.sd(c) + params.mean(c);
    return out;
}

std::pair<TimeSeries, TimeSeries> split_train_forecast(const TimeSeries& series,
                                                       double train_fraction,
                                                       int lag_depth,
                                                       int window_length) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train fraction must lie in (0, 1)");
    const long r = series.rows();
    const long train_len = static_cast<long>(std::floor(static_cast<double>(r) * train_fraction));
    const long forecast_len = r - train_len;
    const long minimum = static_cast<long>(lag_depth) + window_length;
    if (forecast_len < minimum)
        throw std::invalid_argument("forecast segment " + std::to_string(forecast_len) +
                                    " shorter than minimum " + std::to_string(minimum));
    if (train_len < minimum)
        throw std::invalid_argument("train segment " + std::to_string(train_len) +
                                    " shorter than minimum " + std::to_string(minimum));

    TimeSeries train;
    train.values = series.values.topRows(train_len);
    train.names = series.names;
    train.sampling = series.sampling;
    TimeSeries forecast;
    forecast.values = series.values.bottomRows(forecast_len);
    forecast.names = series.names;
    forecast.sampling = series.sampling;
    return {std::move(train), std::move(forecast)};
}

}  // namespace tscausal
