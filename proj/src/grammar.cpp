#include "funclm/grammar.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "funclm/errors.hpp"
#include "json.hpp"

namespace funclm {

using nlohmann::json;

Lexicon::Lexicon(std::vector<BasicType> basic_types, BasicType sentence_type,
                 std::map<std::string, std::vector<PregroupType>> entries)
    : basic_types_(std::move(basic_types)), sentence_(std::move(sentence_type)) {
  std::set<BasicType> declared;
  for (const auto& b : basic_types_) {
    if (b.name.empty()) throw FormatError("basic type names must be non-empty");
    if (!declared.insert(b).second)
      throw FormatError("basic type '" + b.name + "' declared twice");
  }
  if (!declared.count(sentence_))
    throw UnknownBasicType("sentence type '" + sentence_.name + "' is not declared");

  for (auto& [word, types] : entries) {
    if (word.empty() || word == kHoleToken)
      throw FormatError("invalid lexicon word '" + word + "'");
    std::vector<PregroupType> unique;
    for (auto& t : types) {
      for (const auto& s : t.simples())
        if (!declared.count(s.base))
          throw UnknownBasicType("word '" + word + "' uses undeclared basic type '" +
                                 s.base.name + "'");
      if (std::find(unique.begin(), unique.end(), t) == unique.end())
        unique.push_back(std::move(t));
    }
    entries_.emplace(word, std::move(unique));
  }
}

const std::vector<PregroupType>& Lexicon::entries(const std::string& word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) throw UnknownWord(word);
  return it->second;
}

std::vector<PregroupType> Lexicon::types() const {
  std::set<PregroupType> out;
  for (const auto& [word, types] : entries_) out.insert(types.begin(), types.end());
  return {out.begin(), out.end()};
}

std::vector<std::string> Lexicon::vocabulary(const PregroupType& t) const {
  std::vector<std::string> out;
  for (const auto& [word, types] : entries_)
    if (std::find(types.begin(), types.end(), t) != types.end()) out.push_back(word);
  return out;  // std::map iteration is already lexicographic
}

// -- lexicon documents --------------------------------------------------------

LexiconDocument parse_lexicon(std::string_view text) {
  try {
    const json doc = json::parse(text);
    std::vector<BasicType> basics;
    std::map<std::string, std::size_t> dims;
    for (const auto& [name, dim] : doc.at("basic_types").items()) {
      basics.push_back(BasicType{name});
      if (!dim.is_number_integer() || dim.get<long long>() <= 0)
        throw FormatError("dimension of basic type '" + name +
                          "' must be a positive integer");
      dims[name] = dim.get<std::size_t>();
    }
    std::map<std::string, std::vector<PregroupType>> entries;
    for (const auto& [word, types] : doc.at("entries").items()) {
      auto& out = entries[word];
      for (const auto& t : types) out.push_back(parse_type(t.get<std::string>()));
    }
    return {Lexicon(std::move(basics), BasicType{doc.at("sentence_type").get<std::string>()},
                    std::move(entries)),
            std::move(dims)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed lexicon document: ") + e.what());
  }
}

LexiconDocument load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_lexicon(buf.str());
}

std::string serialize(const LexiconDocument& doc) {
  json basics = json::object();
  for (const auto& b : doc.lexicon.basic_types()) {
    auto it = doc.dimensions.find(b.name);
    basics[b.name] = it == doc.dimensions.end() ? json(nullptr) : json(it->second);
  }
  json entries = json::object();
  for (const auto& [word, types] : doc.lexicon.all_entries()) {
    json list = json::array();
    for (const auto& t : types) list.push_back(to_string(t));
    entries[word] = std::move(list);
  }
  return json{{"sentence_type", doc.lexicon.sentence_type().name},
              {"basic_types", std::move(basics)},
              {"entries", std::move(entries)}}
      .dump(2);
}

// -- reduction ----------------------------------------------------------------

bool cup_compatible(const SimpleType& left, const SimpleType& right) {
  return left.base == right.base && right.z == left.z + 1;
}

namespace {

// Memoized enumeration over suffixes (residue must match a target suffix) and
// closed intervals (everything inside must cancel).
class Reducer {
 public:
  Reducer(const PregroupType& seq, const PregroupType& target, std::size_t cap)
      : seq_(seq), target_(target), cap_(cap), n_(seq.size()) {}

  const std::vector<Matching>& suffix(std::size_t i, std::size_t k) {
    const auto key = std::make_pair(i, k);
    if (auto it = suffix_memo_.find(key); it != suffix_memo_.end()) return it->second;
    std::vector<Matching> out;
    if (i == n_) {
      if (k == target_.size()) out.emplace_back();
    } else {
      if (k < target_.size() && seq_[i] == target_[k])
        for (const auto& m : suffix(i + 1, k + 1)) push(out, m);
      for (std::size_t j = i + 1; j < n_; j += 2) {
        if (!cup_compatible(seq_[i], seq_[j])) continue;
        const auto& inner = closed(i + 1, j);
        if (inner.empty()) continue;
        const auto& rest = suffix(j + 1, k);
        for (const auto& a : inner)
          for (const auto& b : rest) push(out, join(i, j, a, b));
      }
    }
    return suffix_memo_.emplace(key, std::move(out)).first->second;
  }

 private:
  const std::vector<Matching>& closed(std::size_t a, std::size_t b) {
    const auto key = std::make_pair(a, b);
    if (auto it = closed_memo_.find(key); it != closed_memo_.end()) return it->second;
    std::vector<Matching> out;
    if (a == b) {
      out.emplace_back();
    } else {
      for (std::size_t j = a + 1; j < b; j += 2) {
        if (!cup_compatible(seq_[a], seq_[j])) continue;
        const auto& inner = closed(a + 1, j);
        if (inner.empty()) continue;
        const auto& rest = closed(j + 1, b);
        for (const auto& x : inner)
          for (const auto& y : rest) push(out, join(a, j, x, y));
      }
    }
    return closed_memo_.emplace(key, std::move(out)).first->second;
  }

  static Matching join(std::size_t i, std::size_t j, const Matching& a, const Matching& b) {
    Matching m;
    m.reserve(1 + a.size() + b.size());
    m.emplace_back(i, j);
    m.insert(m.end(), a.begin(), a.end());
    m.insert(m.end(), b.begin(), b.end());
    return m;
  }

  void push(std::vector<Matching>& out, Matching m) const {
    if (out.size() < cap_) out.push_back(std::move(m));
  }

  const PregroupType& seq_;
  const PregroupType& target_;
  std::size_t cap_;
  std::size_t n_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Matching>> suffix_memo_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<Matching>> closed_memo_;
};

}  // namespace

std::vector<Matching> reduce(const PregroupType& typeseq, const PregroupType& target,
                             std::size_t cap) {
  if (cap == 0) return {};
  Reducer reducer(typeseq, target, cap);
  std::vector<Matching> out = reducer.suffix(0, 0);
  // join() emits the outer pair before nested ones; sort pairs by left end.
  for (auto& m : out) std::sort(m.begin(), m.end());
  std::sort(out.begin(), out.end());
  return out;
}

Diagram reduction_diagram(const PregroupType& typeseq, const Matching& matching) {
  std::set<std::pair<std::size_t, std::size_t>> pending(matching.begin(), matching.end());
  std::vector<std::size_t> current(typeseq.size());
  for (std::size_t i = 0; i < current.size(); ++i) current[i] = i;

  auto types_of = [&](std::size_t begin, std::size_t end) {
    std::vector<SimpleType> out;
    for (std::size_t k = begin; k < end; ++k) out.push_back(typeseq[current[k]]);
    return PregroupType(std::move(out));
  };

  std::vector<Layer> layers;
  while (!pending.empty()) {
    std::size_t k = 0;
    while (k + 1 < current.size() && !pending.count({current[k], current[k + 1]})) ++k;
    if (k + 1 >= current.size())
      throw InterfaceMismatch("matching is not a planar reduction of " +
                              to_string(typeseq));
    const SimpleType& left = typeseq[current[k]];
    if (!cup_compatible(left, typeseq[current[k + 1]]))
      throw InterfaceMismatch("matched positions are not cup compatible");
    layers.push_back(Layer{types_of(0, k), Box(Cup{left.base, left.z}),
                           types_of(k + 2, current.size())});
    pending.erase({current[k], current[k + 1]});
    current.erase(current.begin() + static_cast<std::ptrdiff_t>(k),
                  current.begin() + static_cast<std::ptrdiff_t>(k + 2));
  }
  return Diagram(typeseq, types_of(0, current.size()), std::move(layers));
}

// -- parsing ------------------------------------------------------------------

namespace {

Diagram sentence_diagram(std::span<const std::string> words,
                         std::span<const PregroupType> types, const Matching& matching,
                         std::optional<std::size_t> hole) {
  Diagram boxes = identity({});
  PregroupType flat;
  for (std::size_t i = 0; i < words.size(); ++i) {
    boxes = tensor(boxes, hole == i ? identity(types[i]) : word_box(words[i], types[i]));
    flat = tensor(flat, types[i]);
  }
  return compose(boxes, reduction_diagram(flat, matching));
}

}  // namespace

std::vector<Parse> parse(std::span<const std::string> words, const Lexicon& lexicon,
                         std::size_t cap) {
  std::vector<const std::vector<PregroupType>*> options;
  for (const auto& w : words) options.push_back(&lexicon.entries(w));

  std::vector<Parse> out;
  const PregroupType target = lexicon.sentence();
  std::vector<std::size_t> choice(words.size(), 0);
  for (const auto* o : options)
    if (o->empty()) return out;

  while (out.size() < cap) {
    std::vector<PregroupType> chosen;
    PregroupType flat;
    for (std::size_t i = 0; i < words.size(); ++i) {
      chosen.push_back((*options[i])[choice[i]]);
      flat = tensor(flat, chosen.back());
    }
    for (auto& m : reduce(flat, target, cap - out.size())) {
      Diagram d = sentence_diagram(words, chosen, m, std::nullopt);
      out.push_back(Parse{{words.begin(), words.end()}, chosen, std::move(m), std::move(d)});
    }
    // odometer, last word fastest
    std::size_t pos = words.size();
    while (pos > 0) {
      --pos;
      if (++choice[pos] < options[pos]->size()) break;
      choice[pos] = 0;
      if (pos == 0) return out;
    }
    if (words.empty()) return out;
  }
  return out;
}

MaskedExample make_hole(const Parse& p, std::size_t i) {
  if (i >= p.words.size())
    throw IndexOutOfRange("hole index " + std::to_string(i) + " out of range for " +
                          std::to_string(p.words.size()) + " words");
  MaskedExample ex{p.words, i, p.words[i], p.entry_choice[i],
                   sentence_diagram(p.words, p.entry_choice, p.matching, i)};
  ex.words[i] = kHoleToken;
  return ex;
}

MaskedExample resolve_masked(std::span<const std::string> line_words,
                             const std::string& gold, const Lexicon& lexicon) {
  std::vector<std::string> words(line_words.begin(), line_words.end());
  const auto holes = std::count(words.begin(), words.end(), kHoleToken);
  if (holes != 1)
    throw FormatError("masked sentence must contain exactly one '?' (found " +
                      std::to_string(holes) + ")");
  const auto hole = static_cast<std::size_t>(
      std::find(words.begin(), words.end(), kHoleToken) - words.begin());
  words[hole] = gold;
  const auto parses = parse(words, lexicon);
  if (parses.empty()) {
    std::string sentence;
    for (const auto& w : words) sentence += (sentence.empty() ? "" : " ") + w;
    throw Unparsable("no parse for '" + sentence + "'");
  }
  return make_hole(parses.front(), hole);
}

}  // namespace funclm
