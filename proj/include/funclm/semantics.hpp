#pragma once

// The functor from the grammar category to real vector spaces: dimensions
// for basic types, one encoding matrix per lexicon type, diagram evaluation
// by tensor contraction, and the softmax prediction head.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "funclm/grammar.hpp"
#include "funclm/rigid.hpp"

namespace funclm {

/// Dimension of each basic type. Adjoints share the dimension of their base.
class DimMap {
 public:
  DimMap() = default;
  /// Throws FormatError on a zero dimension.
  explicit DimMap(std::map<std::string, std::size_t> dims);

  /// s = 1, n = 7.
  static DimMap defaults();

  /// Throws UnknownBasicType.
  std::size_t operator()(const BasicType& x) const;
  bool contains(const std::string& name) const { return dims_.count(name) > 0; }
  void set(const std::string& name, std::size_t dim);
  const std::map<std::string, std::size_t>& entries() const noexcept { return dims_; }

  bool operator==(const DimMap&) const = default;

 private:
  std::map<std::string, std::size_t> dims_;
};

/// Product of the dimensions of t's simple types (1 for the unit).
std::size_t dim_of(const DimMap& dims, const PregroupType& t);

/// Dense row-major array. A scalar has an empty shape.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  bool operator==(const Tensor&) const = default;
};

/// E_t: one row per word of V_t, F(t) columns. Columns flatten t's simple
/// types row-major (the last simple type varies fastest).
class EncodingMatrix {
 public:
  /// Zero matrix.
  EncodingMatrix(PregroupType type, std::vector<std::string> words, std::size_t cols);

  const PregroupType& type() const noexcept { return type_; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  std::size_t rows() const noexcept { return words_.size(); }
  std::size_t cols() const noexcept { return cols_; }

  std::optional<std::size_t> row_index(const std::string& word) const;
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  bool operator==(const EncodingMatrix&) const = default;

 private:
  PregroupType type_;
  std::vector<std::string> words_;
  std::size_t cols_;
  std::vector<double> values_;
};

class Model {
 public:
  /// Checks each matrix against the dimension map.
  Model(DimMap dims, BasicType sentence_type, std::vector<EncodingMatrix> matrices);

  /// Zero encoding matrices for every lexicon type.
  static Model zeros(const Lexicon& lexicon, const DimMap& dims);

  const DimMap& dims() const noexcept { return dims_; }
  const BasicType& sentence_type() const noexcept { return sentence_; }
  const std::map<PregroupType, EncodingMatrix>& matrices() const noexcept { return matrices_; }

  /// Throws WordNotInTypeVocabulary when no matrix exists for t.
  const EncodingMatrix& matrix(const PregroupType& t) const;
  EncodingMatrix& matrix(const PregroupType& t);

  /// D = sum over types of |V_t| * F(t).
  std::size_t parameter_count() const;

  bool operator==(const Model&) const = default;

 private:
  DimMap dims_;
  BasicType sentence_;
  std::map<PregroupType, EncodingMatrix> matrices_;
};

/// Row of E_t for w. Throws WordNotInTypeVocabulary.
Tensor word_vector(const Model& model, const std::string& word, const PregroupType& t);

/// A diagram flattened into a tensor network. Wires joined by cups, caps or
/// identities share a wire class; word triangles become factors over classes.
struct Network {
  struct Factor {
    std::string word;
    PregroupType type;
    std::vector<std::size_t> classes;  // one per simple type of `type`
  };

  std::vector<std::size_t> class_dims;
  std::vector<Factor> factors;
  std::vector<std::size_t> open_classes;  // dom wires, then cod wires
  std::vector<std::size_t> open_dims;

  std::size_t output_size() const;
};

/// Throws UnknownBasicType.
Network compile(const Diagram& d, const DimMap& dims);

/// Sums the product of the factors over every wire class, keeping the open
/// wires. Output values are row-major over open wires (dom then cod); the
/// shape drops size-1 wires, so a sentence with F(s) = 1 is a scalar.
Tensor contract(const Network& net, std::span<const std::span<const double>> factors);

/// Reverse pass of contract(): accumulates d(out)/d(factor) contracted with
/// `adjoint` into `factor_grads` (same layout as `factors`).
void contract_backward(const Network& net, std::span<const std::span<const double>> factors,
                       std::span<const double> adjoint,
                       std::span<std::vector<double>> factor_grads);

/// Looks up the word vector for each factor of a compiled network.
std::vector<std::span<const double>> factor_values(const Model& model, const Network& net);

Tensor eval(const Model& model, const Diagram& d);

/// The covector of a hole diagram t -> s, flattened to F(t) entries in the
/// same order as E_t's columns. Requires F(s) = 1.
Tensor eval_hole(const Model& model, const MaskedExample& ex);

std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

/// E_t v for the hole type.
std::vector<double> logits(const Model& model, const PregroupType& t,
                           std::span<const double> covector);

/// softmax(E_t v) over V_t, in V_t order.
std::vector<double> predict(const Model& model, const MaskedExample& ex);

// Checkpoint: JSON document with a version field, the dimension map, and per
// type its row words and row-major values. Doubles round-trip exactly.
inline constexpr int kCheckpointVersion = 1;
std::string serialize(const Model& model);
Model deserialize_model(std::string_view text);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace funclm
