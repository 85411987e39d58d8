#include "easiernet/core/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "easiernet/core/errors.hpp"

namespace easiernet {
namespace {

constexpr std::size_t kMaxAutoClasses = 20;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (*begin == '+') ++begin;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string format_number(double v) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, ptr);
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

RawTable read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  RawTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    if (table.header.empty()) {
      if (line_number == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      table.header = split_line(line);
      for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c].empty()) {
          throw DataError(path + ": header column " + std::to_string(c + 1) + " has no name");
        }
      }
      continue;
    }
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw DataError(path + ": line " + std::to_string(line_number) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(table.header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) {
        throw DataError(path + ": missing value at line " + std::to_string(line_number) +
                        " (data row " + std::to_string(table.rows.size() + 1) + "), column '" +
                        table.header[c] + "'");
      }
    }
    table.rows.push_back(std::move(cells));
    table.line_numbers.push_back(line_number);
  }
  if (table.header.empty()) throw DataError(path + ": file is empty (no header row)");
  if (table.rows.empty()) throw DataError(path + ": file has a header but no data rows");
  return table;
}

double parse_cell(const RawTable& table, const std::string& path, std::size_t r, std::size_t c) {
  auto value = parse_number(table.rows[r][c]);
  if (!value) {
    throw DataError(path + ": cannot parse '" + table.rows[r][c] + "' as a number at line " +
                    std::to_string(table.line_numbers[r]) + " (data row " + std::to_string(r + 1) +
                    "), column '" + table.header[c] + "'");
  }
  return *value;
}

// E[sin(k(a + b))] and E[sin^2(k(a + b))] for a, b ~ Unif(0, 1).
std::pair<double, double> sine_sum_moments(double k) {
  using C = std::complex<double>;
  const C i(0.0, 1.0);
  const C first = (std::exp(i * k) - 1.0) / (i * k);
  const C second = (std::exp(i * (2.0 * k)) - 1.0) / (i * (2.0 * k));
  const double mean = (first * first).imag();
  const double mean_sq = 0.5 - 0.5 * (second * second).real();
  return {mean, mean_sq};
}

void add_noise(Dataset& ds, double signal_variance, double snr, RngStream& rng) {
  const double sd = std::isinf(snr) ? 0.0 : std::sqrt(signal_variance / snr);
  for (double& v : ds.y) {
    const double e = rng.normal();
    if (sd > 0.0) v += sd * e;
  }
}

std::vector<std::string> numbered_names(std::size_t d) {
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= d; ++j) names.push_back("x" + std::to_string(j));
  return names;
}

}  // namespace

void Dataset::validate() const {
  require(n() >= 1, "dataset has no rows");
  require(y.size() == n(), "target length does not match row count");
  require(obs_weights.size() == n(), "weight length does not match row count");
  require(feature_names.size() == d(), "feature name count does not match column count");
  if (task.is_classification()) {
    require(class_labels.size() == task.num_classes, "class label count does not match task");
    for (double label : y) {
      require(label >= 0 && label < static_cast<double>(task.num_classes) && std::floor(label) == label,
              "class index out of range");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = x.select_rows(rows);
  out.feature_names = feature_names;
  out.target_name = target_name;
  out.task = task;
  out.class_labels = class_labels;
  out.y.reserve(rows.size());
  out.obs_weights.reserve(rows.size());
  for (std::size_t r : rows) {
    out.y.push_back(y[r]);
    out.obs_weights.push_back(obs_weights[r]);
  }
  return out;
}

StandardizationStats compute_standardization(const Dataset& dataset) {
  require(dataset.n() >= 2, "standardization needs at least 2 rows");
  const std::size_t n = dataset.n();
  const std::size_t d = dataset.d();
  StandardizationStats stats;
  stats.feature_mean.assign(d, 0.0);
  stats.feature_sd.assign(d, 1.0);
  stats.feature_constant.assign(d, false);

  auto moments = [n](auto&& value_at) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += value_at(r);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double dev = value_at(r) - mean;
      var += dev * dev;
    }
    var /= static_cast<double>(n);
    return std::pair{mean, std::sqrt(var)};
  };
  auto is_constant = [](double mean, double sd) { return sd <= 1e-12 * std::max(1.0, std::abs(mean)); };

  for (std::size_t j = 0; j < d; ++j) {
    auto [mean, sd] = moments([&](std::size_t r) { return dataset.x(r, j); });
    if (is_constant(mean, sd)) {
      stats.feature_constant[j] = true;
    } else {
      stats.feature_mean[j] = mean;
      stats.feature_sd[j] = sd;
    }
  }
  if (!dataset.task.is_classification()) {
    auto [mean, sd] = moments([&](std::size_t r) { return dataset.y[r]; });
    if (!is_constant(mean, sd)) {
      stats.target_mean = mean;
      stats.target_sd = sd;
      stats.target_standardized = true;
    }
  }
  return stats;
}

Matrix apply_standardization(const Matrix& x, const StandardizationStats& stats) {
  require(x.cols() == stats.feature_mean.size(), "standardization width mismatch");
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!stats.feature_constant[j]) row[j] = (row[j] - stats.feature_mean[j]) / stats.feature_sd[j];
    }
  }
  return out;
}

Dataset apply_standardization(const Dataset& dataset, const StandardizationStats& stats) {
  Dataset out = dataset;
  out.x = apply_standardization(dataset.x, stats);
  if (stats.target_standardized) {
    for (double& v : out.y) v = (v - stats.target_mean) / stats.target_sd;
  }
  return out;
}

Matrix invert_standardization(const Matrix& x, const StandardizationStats& stats) {
  require(x.cols() == stats.feature_mean.size(), "standardization width mismatch");
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!stats.feature_constant[j]) row[j] = row[j] * stats.feature_sd[j] + stats.feature_mean[j];
    }
  }
  return out;
}

double destandardize_target(double value, const StandardizationStats& stats) {
  return stats.target_standardized ? value * stats.target_sd + stats.target_mean : value;
}

Standardized standardize(const Dataset& dataset) {
  StandardizationStats stats = compute_standardization(dataset);
  return {apply_standardization(dataset, stats), std::move(stats)};
}

std::vector<double> class_weights(std::span<const double> labels, std::size_t num_classes) {
  require(!labels.empty(), "class weights of an empty label set");
  std::vector<std::size_t> counts(num_classes, 0);
  for (double label : labels) {
    require(label >= 0 && label < static_cast<double>(num_classes) && std::floor(label) == label,
            "class index out of range");
    ++counts[static_cast<std::size_t>(label)];
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    require(counts[k] > 0, "class " + std::to_string(k) + " is absent from the training labels");
  }
  const double n = static_cast<double>(labels.size());
  std::vector<double> weights;
  weights.reserve(labels.size());
  double total = 0.0;
  for (double label : labels) {
    const double w = n / static_cast<double>(counts[static_cast<std::size_t>(label)]);
    weights.push_back(w);
    total += w;
  }
  const double mean = total / n;
  for (double& w : weights) w /= mean;
  return weights;
}

std::vector<double> default_weights(const TaskKind& task, std::span<const double> y) {
  if (task.is_classification()) return class_weights(y, task.num_classes);
  return std::vector<double>(y.size(), 1.0);
}

Dataset load_csv(const std::string& path, const std::string& target_column, TaskHint hint) {
  RawTable table = read_table(path);
  const std::size_t cols = table.header.size();
  if (cols < 2) throw DataError(path + ": need at least one feature column and one target column");

  std::size_t target = cols - 1;
  if (!target_column.empty()) {
    auto it = std::find(table.header.begin(), table.header.end(), target_column);
    if (it == table.header.end()) throw DataError(path + ": no column named '" + target_column + "'");
    target = static_cast<std::size_t>(it - table.header.begin());
  }

  const std::size_t n = table.rows.size();
  Dataset ds;
  ds.target_name = table.header[target];
  for (std::size_t c = 0; c < cols; ++c) {
    if (c != target) ds.feature_names.push_back(table.header[c]);
  }
  ds.x = Matrix(n, cols - 1);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t j = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (c == target) continue;
      ds.x(r, j++) = parse_cell(table, path, r, c);
    }
  }

  std::vector<std::optional<double>> numeric(n);
  bool all_numeric = true;
  for (std::size_t r = 0; r < n; ++r) {
    numeric[r] = parse_number(table.rows[r][target]);
    all_numeric = all_numeric && numeric[r].has_value();
  }

  bool classify = false;
  switch (hint) {
    case TaskHint::Regression:
      if (!all_numeric) {
        for (std::size_t r = 0; r < n; ++r) {
          if (!numeric[r]) parse_cell(table, path, r, target);  // throws with location
        }
      }
      classify = false;
      break;
    case TaskHint::Classification:
      classify = true;
      break;
    case TaskHint::Auto: {
      if (!all_numeric) {
        classify = true;
        break;
      }
      std::set<double> distinct;
      bool integral = true;
      for (const auto& v : numeric) {
        distinct.insert(*v);
        integral = integral && std::floor(*v) == *v;
      }
      classify = integral && distinct.size() <= kMaxAutoClasses;
      break;
    }
  }

  if (!classify) {
    ds.task = TaskKind::regression();
    ds.y.reserve(n);
    for (const auto& v : numeric) ds.y.push_back(*v);
  } else {
    // Numeric labels sort numerically, anything else lexicographically.
    std::vector<std::string> labels;
    if (all_numeric) {
      std::map<double, std::string> by_value;
      for (std::size_t r = 0; r < n; ++r) by_value.emplace(*numeric[r], table.rows[r][target]);
      for (auto& [value, text] : by_value) labels.push_back(text);
      std::map<double, double> index;
      double k = 0;
      for (auto& [value, text] : by_value) index[value] = k++;
      for (const auto& v : numeric) ds.y.push_back(index[*v]);
    } else {
      std::set<std::string> distinct;
      for (const auto& row : table.rows) distinct.insert(row[target]);
      labels.assign(distinct.begin(), distinct.end());
      for (const auto& row : table.rows) {
        ds.y.push_back(static_cast<double>(
            std::lower_bound(labels.begin(), labels.end(), row[target]) - labels.begin()));
      }
    }
    if (labels.size() < 2) {
      throw DataError(path + ": target column '" + ds.target_name + "' has a single class");
    }
    ds.task = TaskKind::classification(labels.size());
    ds.class_labels = std::move(labels);
  }
  ds.obs_weights = default_weights(ds.task, ds.y);
  ds.validate();
  return ds;
}

FeatureTable load_feature_csv(const std::string& path, const std::string& ignore_column) {
  RawTable table = read_table(path);
  FeatureTable out;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (!ignore_column.empty() && table.header[c] == ignore_column) continue;
    keep.push_back(c);
    out.names.push_back(table.header[c]);
  }
  out.x = Matrix(table.rows.size(), keep.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t j = 0; j < keep.size(); ++j) out.x(r, j) = parse_cell(table, path, r, keep[j]);
  }
  return out;
}

void write_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& name : dataset.feature_names) out << name << ',';
  out << dataset.target_name << '\n';
  for (std::size_t r = 0; r < dataset.n(); ++r) {
    for (std::size_t j = 0; j < dataset.d(); ++j) out << format_number(dataset.x(r, j)) << ',';
    if (dataset.task.is_classification()) {
      out << dataset.class_labels[static_cast<std::size_t>(dataset.y[r])];
    } else {
      out << format_number(dataset.y[r]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing '" + path + "'");
}

double additive_block_variance() {
  auto [mean_sin, mean_sin_sq] = sine_sum_moments(2.0);
  const double var_sin = mean_sin_sq - mean_sin * mean_sin;
  // 5c|e - 1/4|: E = 25/32, E[.^2] = 175/144.
  const double var_product = 175.0 / 144.0 - (25.0 / 32.0) * (25.0 / 32.0);
  return var_sin + var_product;
}

double additive_signal_variance(std::size_t num_relevant) {
  require(num_relevant >= 4 && num_relevant % 4 == 0, "num_relevant must be a positive multiple of 4");
  return static_cast<double>(num_relevant / 4) * additive_block_variance();
}

double correlated_signal_variance() {
  auto [mean_sin, mean_sin_sq] = sine_sum_moments(1.0);
  return 7.0 / 144.0 + (mean_sin_sq - mean_sin * mean_sin);
}

std::optional<std::string> additive_design_warning(std::size_t num_relevant) {
  if (num_relevant != 100) return std::nullopt;
  return "num_relevant=100 uses m=24 (covariates 1..100); the published m=19 setting would only "
         "reach covariates 1..80";
}

Dataset simulate_additive(std::size_t num_relevant, std::size_t d, std::size_t n, double snr,
                          std::uint64_t seed) {
  require(num_relevant >= 4 && num_relevant % 4 == 0, "num_relevant must be a positive multiple of 4");
  require(d >= num_relevant, "d must be at least num_relevant");
  require(n >= 1, "n must be at least 1");
  require(snr > 0.0, "snr must be positive");

  RngStream rng(seed);
  Dataset ds;
  ds.x = Matrix(n, d);
  for (double& v : ds.x.data()) v = rng.next_double();
  ds.y.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto x = ds.x.row(r);
    double signal = 0.0;
    for (std::size_t b = 0; b < num_relevant / 4; ++b) {
      const std::size_t o = 4 * b;
      signal += std::sin(2.0 * x[o] + 2.0 * x[o + 1]) + 5.0 * x[o + 2] * std::abs(x[o + 3] - 0.25);
    }
    ds.y[r] = signal;
  }
  add_noise(ds, additive_signal_variance(num_relevant), snr, rng);
  ds.feature_names = numbered_names(d);
  ds.task = TaskKind::regression();
  ds.obs_weights.assign(n, 1.0);
  return ds;
}

Dataset simulate_correlated(double rho, std::size_t n, double snr, std::uint64_t seed) {
  require(rho >= 0.0 && rho <= 1.0, "rho must lie in [0, 1]");
  require(n >= 1, "n must be at least 1");
  require(snr > 0.0, "snr must be positive");

  RngStream rng(seed);
  Dataset ds;
  ds.x = Matrix(n, 8);
  ds.y.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double latent[8];
    for (double& u : latent) u = rng.next_double();
    auto x = ds.x.row(r);
    for (std::size_t i = 0; i < 4; ++i) {
      x[i] = latent[i];
      x[i + 4] = rho * latent[i] + (1.0 - rho) * latent[i + 4];
    }
    ds.y[r] = x[0] * x[1] + std::sin(x[2] + x[3]);
  }
  add_noise(ds, correlated_signal_variance(), snr, rng);
  ds.feature_names = numbered_names(8);
  ds.task = TaskKind::regression();
  ds.obs_weights.assign(n, 1.0);
  return ds;
}

}  // namespace easiernet
