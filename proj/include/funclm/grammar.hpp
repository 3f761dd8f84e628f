#pragma once

// Pregroup lexicon, planar cup-reduction parsing, and hole diagrams for
// masked-word training.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "funclm/rigid.hpp"

namespace funclm {

inline constexpr std::size_t kDefaultParseCap = 64;
inline constexpr const char* kHoleToken = "?";

/// Immutable word -> types dictionary over a declared set of basic types.
class Lexicon {
 public:
  /// Validates that names are unique, that the sentence type is declared and
  /// that every entry only mentions declared basic types (UnknownBasicType).
  /// Duplicate entry types for a word are dropped, keeping first occurrence.
  Lexicon(std::vector<BasicType> basic_types, BasicType sentence_type,
          std::map<std::string, std::vector<PregroupType>> entries);

  const std::vector<BasicType>& basic_types() const noexcept { return basic_types_; }
  const BasicType& sentence_type() const noexcept { return sentence_; }
  PregroupType sentence() const { return PregroupType{SimpleType{sentence_, 0}}; }

  bool contains(const std::string& word) const { return entries_.count(word) > 0; }
  /// Entry types of a word in declaration order; throws UnknownWord.
  const std::vector<PregroupType>& entries(const std::string& word) const;
  const std::map<std::string, std::vector<PregroupType>>& all_entries() const noexcept {
    return entries_;
  }

  /// Every distinct entry type, sorted.
  std::vector<PregroupType> types() const;
  /// V_t: the words having entry type t, in lexicographic order.
  std::vector<std::string> vocabulary(const PregroupType& t) const;

 private:
  std::vector<BasicType> basic_types_;
  BasicType sentence_;
  std::map<std::string, std::vector<PregroupType>> entries_;
};

/// A lexicon file also carries the dimension of each basic type.
struct LexiconDocument {
  Lexicon lexicon;
  std::map<std::string, std::size_t> dimensions;
};

LexiconDocument parse_lexicon(std::string_view text);
LexiconDocument load_lexicon(const std::filesystem::path& path);
std::string serialize(const LexiconDocument& doc);

/// Pairs (i, j), i < j, of positions in a flattened simple-type sequence,
/// sorted by i.
using Matching = std::vector<std::pair<std::size_t, std::size_t>>;

/// True when positions carry (x, z) and (x, z+1).
bool cup_compatible(const SimpleType& left, const SimpleType& right);

/// Every planar matching of `typeseq` whose pairs are cups and whose
/// unmatched positions spell `target`, sorted lexicographically. A pair may
/// only enclose matched positions. At most `cap` matchings are returned.
std::vector<Matching> reduce(const PregroupType& typeseq, const PregroupType& target,
                             std::size_t cap = kDefaultParseCap);

/// The diagram typeseq -> residue applying the matching's cups, always
/// contracting the leftmost currently-adjacent pair first.
/// Throws InterfaceMismatch if the matching is not a valid reduction.
Diagram reduction_diagram(const PregroupType& typeseq, const Matching& matching);

struct Parse {
  std::vector<std::string> words;
  std::vector<PregroupType> entry_choice;
  Matching matching;
  Diagram diagram;  // 1 -> s
};

/// Enumerates entry choices (first word slowest, lexicon order) times
/// reductions to the sentence type. Empty result means ungrammatical.
/// Throws UnknownWord.
std::vector<Parse> parse(std::span<const std::string> words, const Lexicon& lexicon,
                         std::size_t cap = kDefaultParseCap);

struct MaskedExample {
  std::vector<std::string> words;  // words[hole_index] == kHoleToken
  std::size_t hole_index = 0;
  std::string gold;
  PregroupType hole_type;
  Diagram hole_diagram;  // hole_type -> s
};

/// Replaces the triangle of word i by the identity on its chosen type.
/// Throws IndexOutOfRange.
MaskedExample make_hole(const Parse& parse, std::size_t i);

/// Fills the hole with `gold`, takes the first parse and cuts the hole back
/// out. Throws Unparsable, UnknownWord, or FormatError (not exactly one hole).
MaskedExample resolve_masked(std::span<const std::string> line_words,
                             const std::string& gold, const Lexicon& lexicon);

}  // namespace funclm
