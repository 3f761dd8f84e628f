#pragma once

// Masked-word loss, its exact gradient by reverse accumulation, Adam, and
// orthogonal initialization of encoding matrices.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "funclm/grammar.hpp"
#include "funclm/semantics.hpp"

namespace funclm {

/// Flat view of every encoding-matrix entry, in Model::matrices() order.
struct ParamVector {
  struct Segment {
    PregroupType type;
    std::size_t offset = 0;
    std::size_t extent = 0;

    bool operator==(const Segment&) const = default;
  };

  std::vector<double> values;
  std::vector<Segment> layout;

  std::size_t size() const noexcept { return values.size(); }
  bool operator==(const ParamVector&) const = default;
};

ParamVector pack(const Model& model);
/// Writes params back into the matching matrices. Throws LengthMismatch if
/// the layout does not fit the model.
void unpack(const ParamVector& params, Model& model);

struct LossConfig {
  double l1_weight = 1e-1;
  double l2_weight = 5e-2;

  /// Throws Error unless both weights are finite and non-negative.
  void validate() const;
};

/// Sum over the batch of -log p(gold | hole diagram), plus
/// l1 * sum|theta| + l2 * sum theta^2. Throws NonFinite.
double loss(const Model& model, std::span<const MaskedExample> batch, const LossConfig& cfg);

/// Exact gradient of loss(); the l1 subgradient at 0 is 0.
ParamVector grad(const Model& model, std::span<const MaskedExample> batch,
                 const LossConfig& cfg);

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// loss() and grad() from a single forward/backward sweep.
LossAndGrad value_and_grad(const Model& model, std::span<const MaskedExample> batch,
                           const LossConfig& cfg);

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  double lr = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(std::size_t size, double lr = 5e-2);
  bool operator==(const AdamState&) const = default;
};

/// Bias-corrected Adam update. Throws LengthMismatch.
std::pair<AdamState, ParamVector> adam_step(const AdamState& state, const ParamVector& params,
                                            const ParamVector& g);

/// Row-major rows x cols matrix U V^T from the thin SVD of a seeded standard
/// normal draw: orthonormal rows when rows <= cols, orthonormal columns
/// otherwise.
std::vector<double> svd_init(std::uint64_t seed, std::size_t rows, std::size_t cols);

}  // namespace funclm
