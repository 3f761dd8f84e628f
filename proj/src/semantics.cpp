#include "funclm/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "funclm/errors.hpp"
#include "json.hpp"

namespace funclm {

using nlohmann::json;

DimMap::DimMap(std::map<std::string, std::size_t> dims) {
  for (const auto& [name, dim] : dims) set(name, dim);
}

DimMap DimMap::defaults() { return DimMap({{"s", 1}, {"n", 7}}); }

std::size_t DimMap::operator()(const BasicType& x) const {
  auto it = dims_.find(x.name);
  if (it == dims_.end()) throw UnknownBasicType("no dimension for basic type '" + x.name + "'");
  return it->second;
}

void DimMap::set(const std::string& name, std::size_t dim) {
  if (dim == 0) throw FormatError("dimension of '" + name + "' must be positive");
  dims_[name] = dim;
}

std::size_t dim_of(const DimMap& dims, const PregroupType& t) {
  std::size_t out = 1;
  for (const auto& s : t.simples()) out *= dims(s.base);
  return out;
}

// -- encoding matrices and models ---------------------------------------------

EncodingMatrix::EncodingMatrix(PregroupType type, std::vector<std::string> words,
                               std::size_t cols)
    : type_(std::move(type)),
      words_(std::move(words)),
      cols_(cols),
      values_(words_.size() * cols, 0.0) {}

std::optional<std::size_t> EncodingMatrix::row_index(const std::string& word) const {
  auto it = std::lower_bound(words_.begin(), words_.end(), word);
  if (it == words_.end() || *it != word) return std::nullopt;
  return static_cast<std::size_t>(it - words_.begin());
}

Model::Model(DimMap dims, BasicType sentence_type, std::vector<EncodingMatrix> matrices)
    : dims_(std::move(dims)), sentence_(std::move(sentence_type)) {
  dims_(sentence_);
  for (auto& m : matrices) {
    if (m.cols() != dim_of(dims_, m.type()))
      throw FormatError("encoding matrix for '" + to_string(m.type()) + "' has " +
                        std::to_string(m.cols()) + " columns, expected " +
                        std::to_string(dim_of(dims_, m.type())));
    if (!std::is_sorted(m.words().begin(), m.words().end()) ||
        std::adjacent_find(m.words().begin(), m.words().end()) != m.words().end())
      throw FormatError("row words of '" + to_string(m.type()) +
                        "' must be strictly lexicographic");
    const PregroupType key = m.type();
    if (!matrices_.emplace(key, std::move(m)).second)
      throw FormatError("duplicate encoding matrix for '" + to_string(key) + "'");
  }
}

Model Model::zeros(const Lexicon& lexicon, const DimMap& dims) {
  for (const auto& b : lexicon.basic_types()) dims(b);
  std::vector<EncodingMatrix> matrices;
  for (const auto& t : lexicon.types())
    matrices.emplace_back(t, lexicon.vocabulary(t), dim_of(dims, t));
  return Model(dims, lexicon.sentence_type(), std::move(matrices));
}

const EncodingMatrix& Model::matrix(const PregroupType& t) const {
  auto it = matrices_.find(t);
  if (it == matrices_.end())
    throw WordNotInTypeVocabulary("model has no encoding matrix for type '" +
                                  to_string(t) + "'");
  return it->second;
}

EncodingMatrix& Model::matrix(const PregroupType& t) {
  return const_cast<EncodingMatrix&>(std::as_const(*this).matrix(t));
}

std::size_t Model::parameter_count() const {
  std::size_t d = 0;
  for (const auto& [t, m] : matrices_) d += m.values().size();
  return d;
}

namespace {

std::span<const double> word_row(const Model& model, const std::string& word,
                                 const PregroupType& t) {
  const EncodingMatrix& m = model.matrix(t);
  const auto r = m.row_index(word);
  if (!r)
    throw WordNotInTypeVocabulary("word '" + word + "' is not in the vocabulary of type '" +
                                  to_string(t) + "'");
  return m.row(*r);
}

}  // namespace

Tensor word_vector(const Model& model, const std::string& word, const PregroupType& t) {
  const auto row = word_row(model, word, t);
  return Tensor{{row.size()}, {row.begin(), row.end()}};
}

// -- tensor networks ----------------------------------------------------------

std::size_t Network::output_size() const {
  return std::accumulate(open_dims.begin(), open_dims.end(), std::size_t{1},
                         std::multiplies<>());
}

namespace {

struct UnionFind {
  std::vector<std::size_t> parent;

  std::size_t add() {
    parent.push_back(parent.size());
    return parent.size() - 1;
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

Network compile(const Diagram& d, const DimMap& dims) {
  UnionFind wires;
  std::vector<std::size_t> wire_dim;
  auto fresh = [&](const BasicType& x) {
    wire_dim.push_back(dims(x));
    return wires.add();
  };

  std::vector<std::size_t> current;
  for (const auto& s : d.dom().simples()) current.push_back(fresh(s.base));
  const std::vector<std::size_t> dom_wires = current;

  struct RawFactor {
    std::string word;
    PregroupType type;
    std::vector<std::size_t> wires;
  };
  std::vector<RawFactor> raw;

  for (const Layer& layer : d.layers()) {
    const auto at = current.begin() + static_cast<std::ptrdiff_t>(layer.left.size());
    if (const auto* w = std::get_if<WordTriangle>(&layer.box.kind())) {
      std::vector<std::size_t> ids;
      for (const auto& s : w->cod.simples()) ids.push_back(fresh(s.base));
      current.insert(at, ids.begin(), ids.end());
      raw.push_back({w->word, w->cod, std::move(ids)});
    } else if (std::holds_alternative<Cup>(layer.box.kind())) {
      wires.unite(*at, *(at + 1));
      current.erase(at, at + 2);
    } else {
      const auto& c = std::get<Cap>(layer.box.kind());
      const std::size_t id = fresh(c.base);
      current.insert(at, {id, id});
    }
  }

  Network net;
  std::map<std::size_t, std::size_t> class_of_root;
  auto class_of = [&](std::size_t wire) {
    const std::size_t root = wires.find(wire);
    auto [it, inserted] = class_of_root.emplace(root, net.class_dims.size());
    if (inserted) net.class_dims.push_back(wire_dim[wire]);
    return it->second;
  };
  for (std::size_t w = 0; w < wire_dim.size(); ++w) class_of(w);
  for (auto& f : raw) {
    Network::Factor factor{std::move(f.word), std::move(f.type), {}};
    for (auto w : f.wires) factor.classes.push_back(class_of(w));
    net.factors.push_back(std::move(factor));
  }
  for (auto w : dom_wires) net.open_classes.push_back(class_of(w));
  for (auto w : current) net.open_classes.push_back(class_of(w));
  for (auto c : net.open_classes) net.open_dims.push_back(net.class_dims[c]);
  return net;
}

namespace {

std::vector<std::size_t> strides_for(const std::vector<std::size_t>& classes,
                                     const std::vector<std::size_t>& class_dims) {
  std::vector<std::size_t> strides(classes.size());
  std::size_t s = 1;
  for (std::size_t a = classes.size(); a-- > 0;) {
    strides[a] = s;
    s *= class_dims[classes[a]];
  }
  return strides;
}

// Visits every assignment of wire classes with the flattened offset into each
// factor and into the output.
template <class Visit>
void for_each_assignment(const Network& net,
                         std::span<const std::span<const double>> factors, Visit&& visit) {
  if (factors.size() != net.factors.size())
    throw LengthMismatch("network has " + std::to_string(net.factors.size()) +
                         " factors, got " + std::to_string(factors.size()));
  std::vector<std::vector<std::size_t>> strides;
  for (std::size_t f = 0; f < net.factors.size(); ++f) {
    strides.push_back(strides_for(net.factors[f].classes, net.class_dims));
    std::size_t expected = 1;
    for (auto c : net.factors[f].classes) expected *= net.class_dims[c];
    if (factors[f].size() != expected)
      throw LengthMismatch("factor '" + net.factors[f].word + "' has " +
                           std::to_string(factors[f].size()) + " entries, expected " +
                           std::to_string(expected));
  }
  const auto out_strides = strides_for(net.open_classes, net.class_dims);

  std::vector<std::size_t> idx(net.class_dims.size(), 0);
  std::vector<std::size_t> offsets(net.factors.size());
  for (;;) {
    for (std::size_t f = 0; f < net.factors.size(); ++f) {
      std::size_t off = 0;
      const auto& cls = net.factors[f].classes;
      for (std::size_t a = 0; a < cls.size(); ++a) off += idx[cls[a]] * strides[f][a];
      offsets[f] = off;
    }
    std::size_t out = 0;
    for (std::size_t a = 0; a < net.open_classes.size(); ++a)
      out += idx[net.open_classes[a]] * out_strides[a];
    visit(std::as_const(offsets), out);

    std::size_t c = idx.size();
    while (c > 0) {
      --c;
      if (++idx[c] < net.class_dims[c]) break;
      idx[c] = 0;
      if (c == 0) return;
    }
    if (idx.empty()) return;
  }
}

}  // namespace

Tensor contract(const Network& net, std::span<const std::span<const double>> factors) {
  Tensor out;
  for (auto d : net.open_dims)
    if (d != 1) out.shape.push_back(d);
  out.values.assign(net.output_size(), 0.0);
  for_each_assignment(net, factors, [&](const std::vector<std::size_t>& offsets, std::size_t o) {
    double prod = 1.0;
    for (std::size_t f = 0; f < offsets.size(); ++f) prod *= factors[f][offsets[f]];
    out.values[o] += prod;
  });
  return out;
}

void contract_backward(const Network& net, std::span<const std::span<const double>> factors,
                       std::span<const double> adjoint,
                       std::span<std::vector<double>> factor_grads) {
  if (adjoint.size() != net.output_size())
    throw LengthMismatch("adjoint size does not match network output");
  if (factor_grads.size() != factors.size())
    throw LengthMismatch("one gradient buffer per factor required");
  for (std::size_t f = 0; f < factors.size(); ++f)
    factor_grads[f].resize(factors[f].size(), 0.0);

  const std::size_t n = factors.size();
  std::vector<double> prefix(n + 1), suffix(n + 1);
  for_each_assignment(net, factors, [&](const std::vector<std::size_t>& offsets, std::size_t o) {
    const double g = adjoint[o];
    if (g == 0.0) return;
    prefix[0] = 1.0;
    for (std::size_t f = 0; f < n; ++f) prefix[f + 1] = prefix[f] * factors[f][offsets[f]];
    suffix[n] = 1.0;
    for (std::size_t f = n; f-- > 0;) suffix[f] = suffix[f + 1] * factors[f][offsets[f]];
    for (std::size_t f = 0; f < n; ++f)
      factor_grads[f][offsets[f]] += g * prefix[f] * suffix[f + 1];
  });
}

std::vector<std::span<const double>> factor_values(const Model& model, const Network& net) {
  std::vector<std::span<const double>> out;
  out.reserve(net.factors.size());
  for (const auto& f : net.factors) out.push_back(word_row(model, f.word, f.type));
  return out;
}

Tensor eval(const Model& model, const Diagram& d) {
  const Network net = compile(d, model.dims());
  const auto values = factor_values(model, net);
  return contract(net, values);
}

Tensor eval_hole(const Model& model, const MaskedExample& ex) {
  if (dim_of(model.dims(), ex.hole_diagram.cod()) != 1)
    throw Error("hole evaluation requires a one-dimensional sentence space, got F(" +
                to_string(ex.hole_diagram.cod()) + ") = " +
                std::to_string(dim_of(model.dims(), ex.hole_diagram.cod())));
  Tensor t = eval(model, ex.hole_diagram);
  return Tensor{{t.values.size()}, std::move(t.values)};
}

// -- prediction head ----------------------------------------------------------

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double max = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double x : out) sum += std::exp(x - max);
  const double lse = max + std::log(sum);
  for (double& x : out) x -= lse;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double max = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& x : out) sum += (x = std::exp(x - max));
  for (double& x : out) x /= sum;
  return out;
}

std::vector<double> logits(const Model& model, const PregroupType& t,
                           std::span<const double> covector) {
  const EncodingMatrix& m = model.matrix(t);
  if (covector.size() != m.cols())
    throw LengthMismatch("covector has " + std::to_string(covector.size()) +
                         " entries, E_t has " + std::to_string(m.cols()) + " columns");
  std::vector<double> out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * covector[c];
    out[r] = acc;
  }
  return out;
}

std::vector<double> predict(const Model& model, const MaskedExample& ex) {
  const Tensor v = eval_hole(model, ex);
  return softmax(logits(model, ex.hole_type, v.values));
}

// -- checkpoints --------------------------------------------------------------

std::string serialize(const Model& model) {
  json dims = json::object();
  for (const auto& [name, d] : model.dims().entries()) dims[name] = d;
  json matrices = json::array();
  for (const auto& [t, m] : model.matrices())
    matrices.push_back({{"type", to_string(t)},
                        {"words", m.words()},
                        {"cols", m.cols()},
                        {"values", m.values()}});
  return json{{"format", "funclm-model"},
              {"version", kCheckpointVersion},
              {"sentence_type", model.sentence_type().name},
              {"dims", std::move(dims)},
              {"matrices", std::move(matrices)}}
             .dump(1) +
         "\n";
}

Model deserialize_model(std::string_view text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != "funclm-model")
      throw FormatError("not a model checkpoint");
    const int version = doc.at("version").get<int>();
    if (version > kCheckpointVersion)
      throw FormatError("checkpoint version " + std::to_string(version) +
                        " is newer than supported version " +
                        std::to_string(kCheckpointVersion));
    DimMap dims(doc.at("dims").get<std::map<std::string, std::size_t>>());
    std::vector<EncodingMatrix> matrices;
    for (const json& m : doc.at("matrices")) {
      EncodingMatrix e(parse_type(m.at("type").get<std::string>()),
                       m.at("words").get<std::vector<std::string>>(),
                       m.at("cols").get<std::size_t>());
      const json& values = m.at("values");
      if (values.size() != e.values().size())
        throw FormatError("matrix '" + to_string(e.type()) + "' has " +
                          std::to_string(values.size()) + " values, expected " +
                          std::to_string(e.values().size()));
      for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i].is_number())
          throw FormatError("non-numeric value in matrix '" + to_string(e.type()) + "'");
        e.values()[i] = values[i].get<double>();
      }
      matrices.push_back(std::move(e));
    }
    return Model(std::move(dims), BasicType{doc.at("sentence_type").get<std::string>()},
                 std::move(matrices));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << serialize(model);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace funclm
