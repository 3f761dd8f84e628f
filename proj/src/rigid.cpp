#include "funclm/rigid.hpp"

#include <sstream>

#include "funclm/errors.hpp"
#include "json.hpp"

namespace funclm {

using nlohmann::json;

PregroupType PregroupType::slice(std::size_t begin, std::size_t end) const {
  return PregroupType(std::vector<SimpleType>(simples_.begin() + begin,
                                              simples_.begin() + end));
}

PregroupType tensor(const PregroupType& a, const PregroupType& b) {
  std::vector<SimpleType> out = a.simples();
  out.insert(out.end(), b.simples().begin(), b.simples().end());
  return PregroupType(std::move(out));
}

namespace {

PregroupType reverse_shift(const PregroupType& t, int shift) {
  std::vector<SimpleType> out(t.simples().rbegin(), t.simples().rend());
  for (auto& s : out) s.z += shift;
  return PregroupType(std::move(out));
}

}  // namespace

PregroupType left_adjoint(const PregroupType& t) { return reverse_shift(t, -1); }
PregroupType right_adjoint(const PregroupType& t) { return reverse_shift(t, +1); }

std::string to_string(const SimpleType& t) {
  std::string out = t.base.name;
  const char* mark = t.z < 0 ? ".l" : ".r";
  for (int i = 0; i < (t.z < 0 ? -t.z : t.z); ++i) out += mark;
  return out;
}

std::string to_string(const PregroupType& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) out += ' ';
    out += to_string(t[i]);
  }
  return out;
}

std::ostream& operator<<(std::ostream& os, const PregroupType& t) {
  return os << (t.empty() ? std::string("1") : to_string(t));
}

PregroupType parse_type(std::string_view text) {
  std::vector<SimpleType> simples;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    auto bad = [&](const std::string& why) {
      return MalformedType("bad type token '" + token + "': " + why);
    };
    const auto dot = token.find('.');
    SimpleType simple{BasicType{token.substr(0, dot)}, 0};
    if (simple.base.name.empty()) throw bad("empty basic type name");
    if (dot != std::string::npos) {
      std::string_view marks = std::string_view(token).substr(dot);
      char kind = 0;
      while (!marks.empty()) {
        if (marks.size() < 2 || marks[0] != '.' ||
            (marks[1] != 'l' && marks[1] != 'r'))
          throw bad("adjoint marks must be .l or .r");
        if (kind && kind != marks[1]) throw bad("mixed .l and .r marks");
        kind = marks[1];
        simple.z += kind == 'l' ? -1 : 1;
        marks.remove_prefix(2);
      }
    }
    simples.push_back(std::move(simple));
  }
  return PregroupType(std::move(simples));
}

PregroupType Box::dom() const {
  return std::visit(
      [](const auto& k) -> PregroupType {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Cup>) {
          return PregroupType{SimpleType{k.base, k.z}, SimpleType{k.base, k.z + 1}};
        } else {
          return {};
        }
      },
      kind_);
}

PregroupType Box::cod() const {
  return std::visit(
      [](const auto& k) -> PregroupType {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, WordTriangle>) {
          return k.cod;
        } else if constexpr (std::is_same_v<K, Cap>) {
          return PregroupType{SimpleType{k.base, k.z + 1}, SimpleType{k.base, k.z}};
        } else {
          return {};
        }
      },
      kind_);
}

std::optional<std::string> check_interfaces(const PregroupType& dom,
                                            const PregroupType& cod,
                                            const std::vector<Layer>& layers) {
  PregroupType running = dom;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& layer = layers[i];
    const PregroupType in = tensor(tensor(layer.left, layer.box.dom()), layer.right);
    if (in != running) {
      std::ostringstream msg;
      msg << "layer " << i << " expects " << in << " but receives " << running;
      return msg.str();
    }
    running = tensor(tensor(layer.left, layer.box.cod()), layer.right);
  }
  if (running != cod) {
    std::ostringstream msg;
    msg << "diagram declares codomain " << cod << " but layers produce " << running;
    return msg.str();
  }
  return std::nullopt;
}

Diagram::Diagram(PregroupType dom, PregroupType cod, std::vector<Layer> layers)
    : dom_(std::move(dom)), cod_(std::move(cod)), layers_(std::move(layers)) {
  if (auto err = check_interfaces(dom_, cod_, layers_)) throw InterfaceMismatch(*err);
}

Diagram identity(const PregroupType& t) { return Diagram(t, t, {}); }

Diagram compose(const Diagram& d1, const Diagram& d2) {
  if (d1.cod() != d2.dom()) {
    std::ostringstream msg;
    msg << "cannot compose: codomain " << d1.cod() << " != domain " << d2.dom();
    throw InterfaceMismatch(msg.str());
  }
  std::vector<Layer> layers = d1.layers();
  layers.insert(layers.end(), d2.layers().begin(), d2.layers().end());
  return Diagram(d1.dom(), d2.cod(), std::move(layers));
}

Diagram tensor(const Diagram& d1, const Diagram& d2) {
  std::vector<Layer> layers;
  layers.reserve(d1.layers().size() + d2.layers().size());
  for (const Layer& l : d1.layers())
    layers.push_back({l.left, l.box, tensor(l.right, d2.dom())});
  for (const Layer& l : d2.layers())
    layers.push_back({tensor(d1.cod(), l.left), l.box, l.right});
  return Diagram(tensor(d1.dom(), d2.dom()), tensor(d1.cod(), d2.cod()),
                 std::move(layers));
}

namespace {

Diagram single(const Box& box) {
  return Diagram(box.dom(), box.cod(), {Layer{{}, box, {}}});
}

}  // namespace

Diagram cup(const BasicType& x, int z) { return single(Box(Cup{x, z})); }
Diagram cap(const BasicType& x, int z) { return single(Box(Cap{x, z})); }
Diagram word_box(std::string word, PregroupType t) {
  return single(Box(WordTriangle{std::move(word), std::move(t)}));
}

// -- serialization ----------------------------------------------------------

namespace {

json box_to_json(const Box& box) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, WordTriangle>) {
          return {{"kind", "word"}, {"word", k.word}, {"cod", to_string(k.cod)}};
        } else if constexpr (std::is_same_v<K, Cup>) {
          return {{"kind", "cup"}, {"base", k.base.name}, {"z", k.z}};
        } else {
          return {{"kind", "cap"}, {"base", k.base.name}, {"z", k.z}};
        }
      },
      box.kind());
}

Box box_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "word")
    return Box(WordTriangle{j.at("word").get<std::string>(),
                            parse_type(j.at("cod").get<std::string>())});
  BasicType base{j.at("base").get<std::string>()};
  if (base.name.empty()) throw FormatError("box has empty basic type");
  const int z = j.at("z").get<int>();
  if (kind == "cup") return Box(Cup{std::move(base), z});
  if (kind == "cap") return Box(Cap{std::move(base), z});
  throw FormatError("unknown box kind '" + kind + "'");
}

}  // namespace

std::string serialize(const Diagram& d) {
  json layers = json::array();
  for (const Layer& l : d.layers())
    layers.push_back({{"left", to_string(l.left)},
                      {"box", box_to_json(l.box)},
                      {"right", to_string(l.right)}});
  json doc = {{"dom", to_string(d.dom())}, {"cod", to_string(d.cod())},
              {"layers", std::move(layers)}};
  return doc.dump(2);
}

Diagram deserialize_diagram(std::string_view text) {
  try {
    const json doc = json::parse(text);
    std::vector<Layer> layers;
    for (const json& l : doc.at("layers"))
      layers.push_back({parse_type(l.at("left").get<std::string>()),
                        box_from_json(l.at("box")),
                        parse_type(l.at("right").get<std::string>())});
    return Diagram(parse_type(doc.at("dom").get<std::string>()),
                   parse_type(doc.at("cod").get<std::string>()), std::move(layers));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed diagram document: ") + e.what());
  }
}

}  // namespace funclm
