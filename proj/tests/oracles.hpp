#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the reduction, contraction or gradient code it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "funclm/harness.hpp"

namespace funclm::oracle {

inline std::string data_path(const std::string& name) {
  return std::string(FUNCLM_DATA_DIR) + "/" + name;
}

// -- interfaces ---------------------------------------------------------------

/// Re-walks a diagram's layers with plain vectors of simple types.
inline bool interfaces_chain(const Diagram& d) {
  std::vector<SimpleType> running = d.dom().simples();
  for (const Layer& l : d.layers()) {
    std::vector<SimpleType> in = l.left.simples();
    const PregroupType box_dom = l.box.dom(), box_cod = l.box.cod();
    for (const auto& s : box_dom.simples()) in.push_back(s);
    for (const auto& s : l.right.simples()) in.push_back(s);
    if (in != running) return false;
    running = l.left.simples();
    for (const auto& s : box_cod.simples()) running.push_back(s);
    for (const auto& s : l.right.simples()) running.push_back(s);
  }
  return running == d.cod().simples();
}

// -- brute-force reductions ---------------------------------------------------

/// Every partial matching of cup-shaped pairs, filtered afterwards for
/// planarity (no crossing, nothing unmatched under a cup) and residue.
inline std::set<Matching> brute_force_reductions(const PregroupType& seq,
                                                 const PregroupType& target) {
  const std::size_t n = seq.size();
  std::vector<int> partner(n, -1);
  std::vector<bool> decided(n, false);
  std::set<Matching> out;

  auto accept = [&]() {
    Matching m;
    for (std::size_t i = 0; i < n; ++i)
      if (partner[i] > static_cast<int>(i)) m.emplace_back(i, static_cast<std::size_t>(partner[i]));
    for (const auto& [i, j] : m)
      for (const auto& [k, l] : m)
        if (i < k && k < j && j < l) return;
    for (const auto& [i, j] : m)
      for (std::size_t k = i + 1; k < j; ++k)
        if (partner[k] < 0) return;
    std::vector<SimpleType> residue;
    for (std::size_t i = 0; i < n; ++i)
      if (partner[i] < 0) residue.push_back(seq[i]);
    if (residue == target.simples()) out.insert(m);
  };

  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    while (i < n && decided[i]) ++i;
    if (i == n) return accept();
    decided[i] = true;
    rec(i + 1);
    for (std::size_t j = i + 1; j < n; ++j) {
      if (decided[j]) continue;
      if (seq[i].base.name != seq[j].base.name || seq[j].z != seq[i].z + 1) continue;
      decided[j] = true;
      partner[i] = static_cast<int>(j);
      partner[j] = static_cast<int>(i);
      rec(i + 1);
      partner[i] = partner[j] = -1;
      decided[j] = false;
    }
    decided[i] = false;
  };
  rec(0);
  return out;
}

using ParseKey = std::pair<std::vector<PregroupType>, Matching>;

/// All (entry choice, matching) pairs reducing the words to the sentence type.
inline std::set<ParseKey> brute_force_parses(const std::vector<std::string>& words,
                                             const Lexicon& lexicon) {
  std::set<ParseKey> out;
  std::vector<PregroupType> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == words.size()) {
      std::vector<SimpleType> flat;
      for (const auto& t : chosen) flat.insert(flat.end(), t.simples().begin(), t.simples().end());
      for (const auto& m : brute_force_reductions(PregroupType(flat), lexicon.sentence()))
        out.insert({chosen, m});
      return;
    }
    for (const auto& t : lexicon.entries(words[i])) {
      chosen.push_back(t);
      rec(i + 1);
      chosen.pop_back();
    }
  };
  rec(0);
  return out;
}

inline bool is_planar(const Matching& m) {
  for (const auto& [i, j] : m)
    for (const auto& [k, l] : m)
      if (i < k && k < j && j < l) return false;
  return true;
}

// -- matrices -----------------------------------------------------------------

/// Row-major (rows x inner) * (inner x cols).
inline std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b,
                                  std::size_t rows, std::size_t inner, std::size_t cols) {
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < inner; ++k)
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += a[r * inner + k] * b[k * cols + c];
  return out;
}

/// Matrix of a (a_rows x a_cols) tensor (b_rows x b_cols), rows and columns
/// both ordered (first factor, second factor).
inline std::vector<double> kron(const std::vector<double>& a, std::size_t ar, std::size_t ac,
                                const std::vector<double>& b, std::size_t br, std::size_t bc) {
  std::vector<double> out(ar * br * ac * bc);
  const std::size_t cols = ac * bc;
  for (std::size_t i = 0; i < ar; ++i)
    for (std::size_t k = 0; k < br; ++k)
      for (std::size_t j = 0; j < ac; ++j)
        for (std::size_t l = 0; l < bc; ++l)
          out[(i * br + k) * cols + (j * bc + l)] = a[i * ac + j] * b[k * bc + l];
  return out;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// -- layer folding ------------------------------------------------------------

/// Matrix of one layer, id(left) (x) box (x) id(right), rows over the layer's
/// input wires and columns over its output wires.
inline std::vector<double> layer_matrix(const Model& model, const Layer& l, std::size_t* rows,
                                        std::size_t* cols) {
  const DimMap& dims = model.dims();
  std::vector<double> box;
  std::size_t br = 1, bc = 1;
  if (const auto* w = std::get_if<WordTriangle>(&l.box.kind())) {
    const EncodingMatrix& m = model.matrix(w->cod);
    const auto row = m.row(m.row_index(w->word).value());
    box.assign(row.begin(), row.end());
    bc = box.size();
  } else {
    const BasicType x = std::holds_alternative<Cup>(l.box.kind()) ? std::get<Cup>(l.box.kind()).base
                                                                  : std::get<Cap>(l.box.kind()).base;
    const std::size_t d = dims(x);
    box.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) box[i * d + i] = 1.0;
    (std::holds_alternative<Cup>(l.box.kind()) ? br : bc) = d * d;
  }
  const std::size_t dl = dim_of(dims, l.left), dr = dim_of(dims, l.right);
  std::vector<double> il(dl * dl, 0.0), ir(dr * dr, 0.0);
  for (std::size_t i = 0; i < dl; ++i) il[i * dl + i] = 1.0;
  for (std::size_t i = 0; i < dr; ++i) ir[i * dr + i] = 1.0;
  const auto left_box = kron(il, dl, dl, box, br, bc);
  *rows = dl * br * dr;
  *cols = dl * bc * dr;
  return kron(left_box, dl * br, dl * bc, ir, dr, dr);
}

/// Evaluates a diagram by multiplying its layer matrices in order. The result
/// is the F(dom) x F(cod) matrix, flattened row-major.
inline std::vector<double> fold_layers(const Model& model, const Diagram& d) {
  std::size_t rows = dim_of(model.dims(), d.dom()), cols = rows;
  std::vector<double> acc(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) acc[i * cols + i] = 1.0;
  for (const Layer& l : d.layers()) {
    std::size_t lr = 0, lc = 0;
    const auto m = layer_matrix(model, l, &lr, &lc);
    acc = matmul(acc, m, rows, lr, lc);
    cols = lc;
  }
  return acc;
}

// -- random models ------------------------------------------------------------

inline PregroupType T(const char* text) { return parse_type(text); }

/// A toy lexicon with the shipped corpus's three sentence shapes, vocabularies
/// of 1..max_vocab words per type and dims 1..max_dim for n and p.
struct RandomSetup {
  Lexicon lexicon;
  DimMap dims;
};

inline RandomSetup random_setup(std::mt19937_64& rng, std::size_t max_dim = 4,
                                std::size_t max_vocab = 5) {
  std::uniform_int_distribution<std::size_t> dim(1, max_dim), vocab(1, max_vocab);
  const std::vector<std::pair<std::string, PregroupType>> kinds = {
      {"noun", T("n")},          {"iverb", T("n.r s")}, {"tverb", T("n.r s n.l")},
      {"pverb", T("n.r s p.l")}, {"prep", T("p n.l")}};
  std::map<std::string, std::vector<PregroupType>> entries;
  for (const auto& [stem, t] : kinds) {
    const std::size_t k = vocab(rng);
    for (std::size_t i = 0; i < k; ++i) entries[stem + std::to_string(i)].push_back(t);
  }
  Lexicon lex({BasicType{"n"}, BasicType{"p"}, BasicType{"s"}}, BasicType{"s"}, entries);
  DimMap dims({{"n", dim(rng)}, {"p", dim(rng)}, {"s", 1}});
  return {std::move(lex), std::move(dims)};
}

inline Model random_model(std::mt19937_64& rng, const Lexicon& lex, const DimMap& dims) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Model m = Model::zeros(lex, dims);
  for (const auto& t : lex.types())
    for (double& x : m.matrix(t).values()) x = normal(rng);
  return m;
}

inline MaskedExample random_example(std::mt19937_64& rng, const Lexicon& lex) {
  const std::vector<std::vector<PregroupType>> shapes = {
      {T("n"), T("n.r s")},
      {T("n"), T("n.r s n.l"), T("n")},
      {T("n"), T("n.r s p.l"), T("p n.l"), T("n")}};
  const auto& shape = shapes[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
  std::vector<std::string> words;
  for (const auto& t : shape) {
    const auto vocab = lex.vocabulary(t);
    words.push_back(vocab[std::uniform_int_distribution<std::size_t>(0, vocab.size() - 1)(rng)]);
  }
  const auto parses = parse(words, lex);
  const std::size_t hole = std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng);
  return make_hole(parses.at(0), hole);
}

// -- finite differences -------------------------------------------------------

/// Central differences of loss() over every parameter.
inline std::vector<double> finite_difference_grad(const Model& model,
                                                  std::span<const MaskedExample> batch,
                                                  const LossConfig& cfg, double step = 1e-5) {
  ParamVector theta = pack(model);
  Model probe = model;
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double x = theta.values[i];
    theta.values[i] = x + step;
    unpack(theta, probe);
    const double up = loss(probe, batch, cfg);
    theta.values[i] = x - step;
    unpack(theta, probe);
    const double down = loss(probe, batch, cfg);
    theta.values[i] = x;
    out[i] = (up - down) / (2 * step);
  }
  return out;
}

/// Relative error per coordinate; coordinates where both values are below
/// 1e-8 are compared absolutely at 1e-8.
inline bool gradients_agree(const std::vector<double>& analytic,
                            const std::vector<double>& numeric, double rel_tol = 1e-4,
                            double* worst = nullptr) {
  if (analytic.size() != numeric.size()) return false;
  bool ok = true;
  double w = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic[i] - numeric[i]);
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    if (scale < 1e-8) {
      ok = ok && diff <= 1e-8;
      continue;
    }
    w = std::max(w, diff / scale);
    ok = ok && diff / scale < rel_tol;
  }
  if (worst) *worst = w;
  return ok;
}

// -- random diagrams ----------------------------------------------------------

/// Small random diagram starting from `dom`: word boxes, caps and cups at
/// random positions, keeping at most `max_wires` open wires.
inline Diagram random_diagram(std::mt19937_64& rng, const PregroupType& dom,
                              const std::vector<std::pair<std::string, PregroupType>>& words,
                              std::size_t layers, std::size_t max_wires = 4) {
  const std::vector<BasicType> bases = {BasicType{"a"}, BasicType{"b"}};
  Diagram d = identity(dom);
  std::uniform_int_distribution<int> op(0, 2), zdist(-2, 2);
  for (std::size_t k = 0; k < layers; ++k) {
    const PregroupType& cur = d.cod();
    auto pos = std::uniform_int_distribution<std::size_t>(0, cur.size())(rng);
    auto widen = [&](const Diagram& box) {
      return compose(d, tensor(tensor(identity(cur.slice(0, pos)), box),
                               identity(cur.slice(pos, cur.size()))));
    };
    const int o = op(rng);
    if (o == 0 && cur.size() + 1 <= max_wires) {
      const auto& [w, t] = words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(rng)];
      if (cur.size() + t.size() <= max_wires) d = widen(word_box(w, t));
    } else if (o == 1 && cur.size() + 2 <= max_wires) {
      d = widen(cap(bases[std::uniform_int_distribution<std::size_t>(0, 1)(rng)], zdist(rng)));
    } else {
      std::vector<std::size_t> spots;
      for (std::size_t i = 0; i + 1 < cur.size(); ++i)
        if (cup_compatible(cur[i], cur[i + 1])) spots.push_back(i);
      if (spots.empty()) continue;
      const std::size_t i = spots[std::uniform_int_distribution<std::size_t>(0, spots.size() - 1)(rng)];
      d = compose(d, tensor(tensor(identity(cur.slice(0, i)), cup(cur[i].base, cur[i].z)),
                            identity(cur.slice(i + 2, cur.size()))));
    }
  }
  return d;
}

/// Model over basic types a (dim 2) and b (dim 3) with two words per type.
struct DiagramModel {
  Model model;
  std::vector<std::pair<std::string, PregroupType>> words;
};

inline DiagramModel random_diagram_model(std::mt19937_64& rng) {
  const std::vector<PregroupType> types = {T("a"), T("b.r"), T("a b.l"), T("a.l a"), T("b a.r")};
  std::map<std::string, std::vector<PregroupType>> entries;
  std::vector<std::pair<std::string, PregroupType>> words;
  for (std::size_t i = 0; i < types.size(); ++i)
    for (int k = 0; k < 2; ++k) {
      const std::string w = "w" + std::to_string(i) + "_" + std::to_string(k);
      entries[w].push_back(types[i]);
      words.emplace_back(w, types[i]);
    }
  Lexicon lex({BasicType{"a"}, BasicType{"b"}, BasicType{"s"}}, BasicType{"s"}, entries);
  DimMap dims({{"a", 2}, {"b", 3}, {"s", 1}});
  return {random_model(rng, lex, dims), std::move(words)};
}

/// Random short type over a and b with windings in [-2, 2].
inline PregroupType random_type(std::mt19937_64& rng, std::size_t max_len) {
  std::vector<SimpleType> s;
  const std::size_t len = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
  for (std::size_t i = 0; i < len; ++i)
    s.push_back({BasicType{std::uniform_int_distribution<int>(0, 1)(rng) ? "a" : "b"},
                 std::uniform_int_distribution<int>(-2, 2)(rng)});
  return PregroupType(std::move(s));
}

// -- categorical checks -------------------------------------------------------

/// Left and right yanking for (x, z) as diagrams y -> y.
inline std::pair<Diagram, Diagram> snakes(const BasicType& x, int z) {
  const PregroupType y{SimpleType{x, z}};
  // y -> y yˡ y -> y
  Diagram left = compose(tensor(cap(x, z - 1), identity(y)), tensor(identity(y), cup(x, z - 1)));
  // y -> y yʳ y -> y
  Diagram right = compose(tensor(identity(y), cap(x, z)), tensor(cup(x, z), identity(y)));
  return {left, right};
}

inline std::vector<double> identity_matrix(std::size_t n) {
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i * n + i] = 1.0;
  return out;
}

}  // namespace funclm::oracle
