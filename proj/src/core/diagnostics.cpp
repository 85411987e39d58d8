#include "easiernet/core/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "easiernet/core/errors.hpp"

namespace easiernet {
namespace {

using Mask = std::vector<bool>;

struct Reachability {
  std::vector<Mask> from_inputs;  // [l-1]: node of layer l reachable from a nonzero beta
  std::vector<Mask> to_output;    // [l-1]: node of layer l has a nonzero path to the output
};

bool feeds_output(const NetworkParams& params, const NetworkConfig& config, std::size_t layer) {
  if (!config.skip_connections_enabled) return layer == config.num_skip_layers();
  return params.alpha[layer - 1] != 0.0;
}

bool row_nonzero(const Matrix& m, std::size_t r) {
  auto row = m.row(r);
  return std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; });
}

Reachability reachability(const NetworkParams& params, const NetworkConfig& config) {
  check_shapes(params, config);
  const std::size_t skips = config.num_skip_layers();
  Reachability reach;

  reach.from_inputs.resize(skips);
  reach.from_inputs[0].resize(config.input_dim);
  for (std::size_t i = 0; i < config.input_dim; ++i) reach.from_inputs[0][i] = params.beta[i] != 0.0;
  for (std::size_t k = 0; k + 1 < skips; ++k) {
    const Matrix& w = params.weights[k];
    Mask next(w.cols(), false);
    for (std::size_t j = 0; j < w.rows(); ++j) {
      if (!reach.from_inputs[k][j]) continue;
      for (std::size_t c = 0; c < w.cols(); ++c) {
        if (w(j, c) != 0.0) next[c] = true;
      }
    }
    reach.from_inputs[k + 1] = std::move(next);
  }

  reach.to_output.resize(skips);
  for (std::size_t idx = skips; idx-- > 0;) {
    const std::size_t layer = idx + 1;
    const std::size_t width = config.width(layer);
    Mask mask(width, false);
    const bool direct = feeds_output(params, config, layer);
    for (std::size_t j = 0; j < width; ++j) {
      if (direct && row_nonzero(params.skip_weights[idx], j)) {
        mask[j] = true;
        continue;
      }
      if (idx + 1 < skips) {
        const Matrix& w = params.weights[idx];
        for (std::size_t c = 0; c < w.cols(); ++c) {
          if (w(j, c) != 0.0 && reach.to_output[idx + 1][c]) {
            mask[j] = true;
            break;
          }
        }
      }
    }
    reach.to_output[idx] = std::move(mask);
  }
  return reach;
}

}  // namespace

std::vector<std::size_t> support_of(const NetworkParams& params, const NetworkConfig& config) {
  const Reachability reach = reachability(params, config);
  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < config.input_dim; ++i) {
    if (reach.from_inputs[0][i] && reach.to_output[0][i]) support.push_back(i);
  }
  return support;
}

VarianceContribution variance_contribution(const NetworkParams& params, const NetworkConfig& config,
                                           const Matrix& x) {
  require(x.rows() >= 2, "variance contributions need at least 2 rows");
  const ForwardTrace trace = forward_trace(params, config, x);
  const std::size_t skips = config.num_skip_layers();
  const std::size_t n = x.rows();
  const std::size_t out = config.output_dim();

  std::vector<double> scale(skips, 0.0);
  for (std::size_t l = 0; l < skips; ++l) {
    scale[l] = config.skip_connections_enabled ? std::abs(params.alpha[l]) : (l + 1 == skips ? 1.0 : 0.0);
  }

  auto column_variance = [n](auto&& value_at) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += value_at(r);
    mean /= static_cast<double>(n);
    double var = 0.0;
    double mean_sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = value_at(r);
      var += (v - mean) * (v - mean);
      mean_sq += v * v;
    }
    return std::pair{var / static_cast<double>(n), mean_sq / static_cast<double>(n)};
  };

  VarianceContribution result;
  result.proportions.assign(skips, 0.0);
  double total_var = 0.0;
  double total_ms = 0.0;
  for (std::size_t j = 0; j < out; ++j) {
    auto [v, ms] = column_variance([&](std::size_t r) {
      double s = 0.0;
      for (std::size_t l = 0; l < skips; ++l) s += scale[l] * trace.zeta[l](r, j);
      return s;
    });
    total_var += v / static_cast<double>(out);
    total_ms += ms / static_cast<double>(out);
  }
  if (total_var <= 1e-20 * std::max(1.0, total_ms)) {
    result.degenerate = true;
    return result;
  }
  for (std::size_t l = 0; l < skips; ++l) {
    if (scale[l] == 0.0) continue;
    double layer_var = 0.0;
    for (std::size_t j = 0; j < out; ++j) {
      layer_var += column_variance([&](std::size_t r) { return scale[l] * trace.zeta[l](r, j); }).first /
                   static_cast<double>(out);
    }
    result.proportions[l] = layer_var / total_var;
  }
  return result;
}

StructureSummary structure_summary(const NetworkParams& params, const NetworkConfig& config) {
  const Reachability reach = reachability(params, config);
  StructureSummary summary;
  std::size_t active_nodes = 0;
  for (std::size_t layer = 2; layer < config.num_layers; ++layer) {
    const Mask& fwd = reach.from_inputs[layer - 1];
    const Mask& bwd = reach.to_output[layer - 1];
    std::size_t count = 0;
    for (std::size_t j = 0; j < fwd.size(); ++j) count += (fwd[j] && bwd[j]) ? 1 : 0;
    summary.active_nodes_per_layer.push_back(count);
    if (count > 0) {
      ++summary.active_layer_count;
      active_nodes += count;
    }
  }
  if (summary.active_layer_count > 0) {
    summary.avg_hidden_nodes_per_active_layer =
        static_cast<double>(active_nodes) / static_cast<double>(summary.active_layer_count);
  }
  for (std::size_t i = 0; i < config.input_dim; ++i) {
    if (reach.from_inputs[0][i] && reach.to_output[0][i]) ++summary.support_size;
  }
  return summary;
}

StructureSummary structure_summary(const NetworkParams& params, const NetworkConfig& config,
                                   const Matrix& x) {
  StructureSummary summary = structure_summary(params, config);
  summary.contributions = variance_contribution(params, config, x);
  return summary;
}

}  // namespace easiernet
