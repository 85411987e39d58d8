#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "easiernet/core/network.hpp"

namespace easiernet {

/// 0-based indices of the input variables the network can depend on: beta_i
/// is nonzero and a path of nonzero weights leads from input i to the output
/// through some skip projection whose alpha is nonzero. This over-approximates
/// the functional support (ReLU saturation is ignored).
std::vector<std::size_t> support_of(const NetworkParams& params, const NetworkConfig& config);

struct VarianceContribution {
  std::vector<double> proportions;  // one per non-output layer
  bool degenerate = false;          // output constant over the sample
};

/// Var(|alpha_l| zeta_l) / Var(sum_l' |alpha_l'| zeta_l') over the rows of x.
/// Multi-output variances are averaged over output columns before the ratio.
VarianceContribution variance_contribution(const NetworkParams& params, const NetworkConfig& config,
                                           const Matrix& x);

struct StructureSummary {
  std::size_t active_layer_count = 0;
  double avg_hidden_nodes_per_active_layer = 0.0;
  std::size_t support_size = 0;
  std::vector<std::size_t> active_nodes_per_layer;  // hidden layers 2..L-1
  std::optional<VarianceContribution> contributions;
};

/// A hidden node is active when it has a nonzero incoming connection from a
/// supported input path and a nonzero path onward to the output.
StructureSummary structure_summary(const NetworkParams& params, const NetworkConfig& config);
StructureSummary structure_summary(const NetworkParams& params, const NetworkConfig& config,
                                   const Matrix& x);

}  // namespace easiernet
