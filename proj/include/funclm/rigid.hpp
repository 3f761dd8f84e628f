#pragma once

// Free rigid monoidal category generated by a pregroup grammar: types with
// iterated adjoints, and progressive planar string diagrams over word
// triangles, cups and caps.

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace funclm {

struct BasicType {
  std::string name;

  auto operator<=>(const BasicType&) const = default;
};

/// A basic type with a winding number: z < 0 is an iterated left adjoint,
/// z > 0 an iterated right adjoint.
struct SimpleType {
  BasicType base;
  int z = 0;

  auto operator<=>(const SimpleType&) const = default;
};

/// A sequence of simple types. The empty sequence is the monoidal unit.
class PregroupType {
 public:
  PregroupType() = default;
  explicit PregroupType(std::vector<SimpleType> simples)
      : simples_(std::move(simples)) {}
  PregroupType(std::initializer_list<SimpleType> simples) : simples_(simples) {}

  static PregroupType basic(std::string name) {
    return PregroupType{SimpleType{BasicType{std::move(name)}, 0}};
  }

  const std::vector<SimpleType>& simples() const noexcept { return simples_; }
  std::size_t size() const noexcept { return simples_.size(); }
  bool empty() const noexcept { return simples_.empty(); }
  const SimpleType& operator[](std::size_t i) const { return simples_[i]; }

  /// Simples in [begin, end).
  PregroupType slice(std::size_t begin, std::size_t end) const;

  auto operator<=>(const PregroupType&) const = default;

 private:
  std::vector<SimpleType> simples_;
};

PregroupType tensor(const PregroupType& a, const PregroupType& b);

/// Reverses the sequence and decrements every winding number.
PregroupType left_adjoint(const PregroupType& t);
/// Reverses the sequence and increments every winding number.
PregroupType right_adjoint(const PregroupType& t);

// Text notation: a basic type name followed by repeated ".l" or ".r" marks,
// space separated, e.g. "n.r s n.l". The unit is the empty string.
std::string to_string(const SimpleType& t);
std::string to_string(const PregroupType& t);
/// Throws MalformedType on bad input (mixed marks, empty marks, bad chars).
PregroupType parse_type(std::string_view text);

std::ostream& operator<<(std::ostream& os, const PregroupType& t);

struct WordTriangle {
  std::string word;
  PregroupType cod;

  bool operator==(const WordTriangle&) const = default;
};

/// (x, z)(x, z+1) -> 1
struct Cup {
  BasicType base;
  int z = 0;

  bool operator==(const Cup&) const = default;
};

/// 1 -> (x, z+1)(x, z). This is the unit that yanks against Cup(x, z):
/// for y = (x, z+1), cap gives y yˡ and the cup cancels yˡ y.
struct Cap {
  BasicType base;
  int z = 0;

  bool operator==(const Cap&) const = default;
};

class Box {
 public:
  using Kind = std::variant<WordTriangle, Cup, Cap>;

  Box(Kind kind) : kind_(std::move(kind)) {}  // NOLINT(implicit)

  const Kind& kind() const noexcept { return kind_; }
  PregroupType dom() const;
  PregroupType cod() const;

  bool operator==(const Box&) const = default;

 private:
  Kind kind_;
};

/// One box with the wires passing to its left and right.
struct Layer {
  PregroupType left;
  Box box;
  PregroupType right;

  bool operator==(const Layer&) const = default;
};

/// A string diagram in one-box-per-layer normal form. The constructor
/// enforces interface chaining, so every Diagram value is well typed.
class Diagram {
 public:
  /// Throws InterfaceMismatch if the layers do not chain from dom to cod.
  Diagram(PregroupType dom, PregroupType cod, std::vector<Layer> layers);

  const PregroupType& dom() const noexcept { return dom_; }
  const PregroupType& cod() const noexcept { return cod_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  bool operator==(const Diagram&) const = default;

 private:
  PregroupType dom_;
  PregroupType cod_;
  std::vector<Layer> layers_;
};

/// Returns a description of the first chaining violation, if any.
std::optional<std::string> check_interfaces(const PregroupType& dom,
                                            const PregroupType& cod,
                                            const std::vector<Layer>& layers);

Diagram identity(const PregroupType& t);
/// Sequential composition; throws InterfaceMismatch when d1.cod != d2.dom.
Diagram compose(const Diagram& d1, const Diagram& d2);
/// Monoidal product: d1's layers (widened on the right by d2.dom), then
/// d2's layers (widened on the left by d1.cod).
Diagram tensor(const Diagram& d1, const Diagram& d2);
Diagram cup(const BasicType& x, int z);
Diagram cap(const BasicType& x, int z);
Diagram word_box(std::string word, PregroupType t);

// Round-trip stable JSON document: {"dom", "cod", "layers": [{"left",
// "box": {"kind", ...}, "right"}]} with types in text notation.
std::string serialize(const Diagram& d);
/// Throws FormatError / MalformedType / InterfaceMismatch.
Diagram deserialize_diagram(std::string_view text);

}  // namespace funclm
