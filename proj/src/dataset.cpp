#include "csr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "csr/error.hpp"
#include "csr/rng.hpp"

namespace csr {

std::vector<std::size_t> Dataset::mislabeled() const {
    std::vector<std::size_t> out;
    if (!y_clean) return out;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] != (*y_clean)[i]) out.push_back(i);
    return out;
}

std::vector<std::size_t> Dataset::truly_clean() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!y_clean || y[i] == (*y_clean)[i]) out.push_back(i);
    return out;
}

void Dataset::validate() const {
    if (y.empty()) throw ContractViolation("dataset is empty");
    if (x.rows != y.size()) throw ContractViolation("dataset: feature/label count mismatch");
    if (y_clean && y_clean->size() != y.size()) throw ContractViolation("dataset: clean label count mismatch");
    auto in_range = [&](int l) { return l >= 0 && l < num_classes; };
    if (!std::all_of(y.begin(), y.end(), in_range)) throw ContractViolation("dataset: label outside [0, K)");
    if (y_clean && !std::all_of(y_clean->begin(), y_clean->end(), in_range))
        throw ContractViolation("dataset: clean label outside [0, K)");
}

std::pair<Dataset, Dataset> make_gaussian_clusters(std::size_t n, int k, std::size_t d, double separation,
                                                   double within_std, std::uint64_t seed) {
    if (k < 2 || n < static_cast<std::size_t>(k)) throw ContractViolation("make_gaussian_clusters: need K >= 2, N >= K");
    if (static_cast<std::size_t>(k) > d)
        throw ContractViolation("make_gaussian_clusters: cannot place K equidistant centers in d < K dimensions");
    if (separation < 0.0 || within_std < 0.0) throw ContractViolation("make_gaussian_clusters: negative scale");

    auto rng = make_rng(seed, Stream::data);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Random orthonormal basis by Gram-Schmidt; centers on its first K axes.
    Matrix basis(d, d);
    for (double& v : basis.data) v = normal(rng);
    for (std::size_t i = 0; i < d; ++i) {
        auto bi = basis.row(i);
        for (std::size_t j = 0; j < i; ++j) {
            auto bj = basis.row(j);
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += bi[c] * bj[c];
            for (std::size_t c = 0; c < d; ++c) bi[c] -= dot * bj[c];
        }
        double norm = 0.0;
        for (double v : bi) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : bi) v /= norm;
    }
    const double radius = separation / std::sqrt(2.0);

    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    std::shuffle(labels.begin(), labels.end(), rng);

    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto center = basis.row(static_cast<std::size_t>(labels[i]));
        auto row = x.row(i);
        for (std::size_t c = 0; c < d; ++c) row[c] = radius * center[c] + within_std * normal(rng);
    }

    const std::size_t n_train = (n * 4) / 5;
    auto take = [&](std::size_t from, std::size_t to, Split split) {
        Dataset ds;
        ds.x = Matrix(to - from, d);
        std::copy(x.data.begin() + static_cast<std::ptrdiff_t>(from * d),
                  x.data.begin() + static_cast<std::ptrdiff_t>(to * d), ds.x.data.begin());
        ds.y.assign(labels.begin() + static_cast<std::ptrdiff_t>(from), labels.begin() + static_cast<std::ptrdiff_t>(to));
        ds.y_clean = ds.y;
        ds.num_classes = k;
        ds.split = split;
        return ds;
    };
    return {take(0, n_train, Split::train), take(n_train, n, Split::test)};
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return v;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

int parse_label(std::string_view text, std::size_t line) {
    int v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ParseError("bad label '" + std::string(text) + "'", line);
    return v;
}

}  // namespace

Dataset load_csv(const std::string& path, std::optional<int> num_classes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file " + path, 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_commas(line);
    std::size_t d = 0;
    while (d < header.size() && header[d] == "f" + std::to_string(d)) ++d;
    const std::size_t rest = header.size() - d;
    if (d == 0 || rest == 0 || rest > 2 || header[d] != "label" || (rest == 2 && header[d + 1] != "clean_label"))
        throw ParseError("header must be f0,...,f{d-1},label[,clean_label]", 1);
    const bool has_clean = rest == 2;

    Dataset ds;
    std::vector<double> values;
    std::vector<int> clean;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        if (cells.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(cells.size()),
                             line_no);
        for (std::size_t j = 0; j < d; ++j) {
            try {
                values.push_back(parse_double(cells[j]));
            } catch (const std::invalid_argument& e) {
                throw ParseError(e.what(), line_no);
            }
        }
        ds.y.push_back(parse_label(cells[d], line_no));
        if (has_clean) clean.push_back(parse_label(cells[d + 1], line_no));
    }
    if (ds.y.empty()) throw ParseError("no data rows in " + path, line_no);
    ds.x = Matrix(ds.y.size(), d);
    ds.x.data = std::move(values);
    if (has_clean) ds.y_clean = std::move(clean);
    int max_label = *std::max_element(ds.y.begin(), ds.y.end());
    if (ds.y_clean) max_label = std::max(max_label, *std::max_element(ds.y_clean->begin(), ds.y_clean->end()));
    ds.num_classes = num_classes.value_or(max_label + 1);
    ds.validate();
    return ds;
}

void save_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t j = 0; j < data.dim(); ++j) out << 'f' << j << ',';
    out << "label";
    if (data.y_clean) out << ",clean_label";
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.x.row(i)) out << format_double(v) << ',';
        out << data.y[i];
        if (data.y_clean) out << ',' << (*data.y_clean)[i];
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace csr
