#include "funclm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace funclm {

using nlohmann::json;

// -- corpus -------------------------------------------------------------------

MaskedLine parse_masked_line(std::string_view line) {
  if (line.empty()) throw FormatError("empty line");
  const auto open = line.rfind(" (");
  if (line.back() != ')' || open == std::string_view::npos)
    throw FormatError("missing trailing '(gold)'");
  MaskedLine out;
  out.gold = std::string(line.substr(open + 2, line.size() - open - 3));
  if (out.gold.empty() || out.gold.find_first_of(" ()?") != std::string::npos)
    throw FormatError("bad gold word '" + out.gold + "'");

  std::string_view body = line.substr(0, open);
  std::size_t holes = 0;
  while (!body.empty()) {
    const auto sp = body.find(' ');
    std::string tok(body.substr(0, sp));
    if (tok.empty()) throw FormatError("tokens must be separated by single spaces");
    if (tok.find_first_of("()") != std::string::npos)
      throw FormatError("unexpected parenthesis in token '" + tok + "'");
    if (tok == kHoleToken) {
      ++holes;
      out.hole_index = out.tokens.size();
    }
    out.tokens.push_back(std::move(tok));
    if (sp == std::string_view::npos) break;
    body.remove_prefix(sp + 1);
    if (body.empty()) throw FormatError("trailing space before '(gold)'");
  }
  if (holes != 1)
    throw FormatError("expected exactly one '?' token, found " + std::to_string(holes));
  return out;
}

std::string format_masked_line(const MaskedLine& line) {
  std::string out;
  for (const auto& t : line.tokens) out += t + ' ';
  return out + '(' + line.gold + ')';
}

std::vector<MaskedExample> Corpus::examples() const {
  std::vector<MaskedExample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.example);
  return out;
}

namespace {

std::string describe(const std::string& source, const std::vector<CorpusError::Problem>& ps) {
  std::string out = source + ": " + std::to_string(ps.size()) + " bad line(s)";
  for (const auto& p : ps) out += "\n  line " + std::to_string(p.lineno) + ": " + p.message;
  return out;
}

}  // namespace

CorpusError::CorpusError(std::string source, std::vector<Problem> problems)
    : Error(describe(source, problems)), problems_(std::move(problems)) {}

Corpus parse_corpus(std::string_view text, const Lexicon& lexicon, std::string source) {
  Corpus corpus{std::move(source), {}};
  std::vector<CorpusError::Problem> problems;
  std::istringstream in{std::string(text)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const MaskedLine masked = parse_masked_line(line);
      corpus.entries.push_back({line, resolve_masked(masked.tokens, masked.gold, lexicon)});
    } catch (const FormatError& e) {
      problems.push_back({lineno, CorpusError::Kind::MalformedLine, e.what()});
    } catch (const Unparsable& e) {
      problems.push_back({lineno, CorpusError::Kind::Unparsable, e.what()});
    } catch (const UnknownWord& e) {
      problems.push_back({lineno, CorpusError::Kind::UnknownWord, e.what()});
    }
  }
  if (!problems.empty()) throw CorpusError(corpus.source, std::move(problems));
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const Lexicon& lexicon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), lexicon, path.string());
}

// -- configuration ------------------------------------------------------------

void RunConfig::validate() const {
  if (!std::isfinite(lr) || lr <= 0) throw Error("learning rate must be positive and finite");
  LossConfig{l1, l2}.validate();
  for (const auto& [name, d] : dims)
    if (d == 0) throw Error("dimension of '" + name + "' must be positive");
  if (top_k == 0) throw Error("top-k must be positive");
}

DimMap resolve_dims(const LexiconDocument& doc,
                    const std::map<std::string, std::size_t>& overrides) {
  DimMap dims = DimMap::defaults();
  for (const auto& [name, d] : doc.dimensions) dims.set(name, d);
  for (const auto& [name, d] : overrides) {
    const auto& basics = doc.lexicon.basic_types();
    if (std::find(basics.begin(), basics.end(), BasicType{name}) == basics.end())
      throw UnknownBasicType("dimension override for undeclared basic type '" + name + "'");
    dims.set(name, d);
  }
  return dims;
}

// -- training -----------------------------------------------------------------

std::uint64_t type_seed(std::uint64_t seed, const PregroupType& t) {
  // FNV-1a over the seed bytes and the type's text form, then a splitmix64
  // finalizer.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : to_string(t)) mix(static_cast<unsigned char>(c));
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

Model initialize(const Lexicon& lexicon, const DimMap& dims, std::uint64_t seed) {
  Model model = Model::zeros(lexicon, dims);
  for (const auto& t : lexicon.types()) {
    EncodingMatrix& m = model.matrix(t);
    m.values() = svd_init(type_seed(seed, t), m.rows(), m.cols());
  }
  return model;
}

TrainResult train(const Lexicon& lexicon, const DimMap& dims,
                  std::span<const MaskedExample> batch, const TrainOptions& opts) {
  TrainResult result{initialize(lexicon, dims, opts.seed), {}, 0.0};
  ParamVector params = pack(result.model);
  AdamState state = AdamState::init(params.size(), opts.lr);
  result.loss_history.reserve(opts.epochs);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    auto [value, g] = value_and_grad(result.model, batch, opts.loss);
    result.loss_history.push_back(value);
    std::tie(state, params) = adam_step(state, params, g);
    unpack(params, result.model);
  }
  result.final_loss = loss(result.model, batch, opts.loss);
  return result;
}

TrainResult train(const RunConfig& cfg) {
  cfg.validate();
  const LexiconDocument doc = load_lexicon(cfg.lexicon);
  const DimMap dims = resolve_dims(doc, cfg.dims);
  const Corpus corpus = load_corpus(cfg.train, doc.lexicon);
  const auto batch = corpus.examples();
  TrainResult result =
      train(doc.lexicon, dims, batch, {cfg.seed, cfg.epochs, cfg.lr, {cfg.l1, cfg.l2}});
  if (!cfg.out.empty()) save_model(result.model, cfg.out);
  return result;
}

// -- evaluation ---------------------------------------------------------------

std::vector<Ranked> rank(const Model& model, const MaskedExample& ex) {
  const auto probs = predict(model, ex);
  const auto& words = model.matrix(ex.hole_type).words();
  std::vector<Ranked> out;
  for (std::size_t i = 0; i < probs.size(); ++i) out.push_back({words[i], probs[i]});
  // words are already lexicographic, so a stable sort breaks ties toward the
  // first word
  std::stable_sort(out.begin(), out.end(),
                   [](const Ranked& a, const Ranked& b) { return a.probability > b.probability; });
  return out;
}

EvalReport evaluate(const Model& model, const Corpus& corpus, std::size_t top_k) {
  EvalReport report;
  for (const auto& entry : corpus.entries) {
    auto ranking = rank(model, entry.example);
    const bool correct = ranking.front().word == entry.example.gold;
    ranking.resize(std::min(top_k, ranking.size()));
    report.records.push_back(
        {entry.line, entry.example.gold, entry.example.hole_type, std::move(ranking), correct});
    report.correct += correct;
  }
  report.total = report.records.size();
  report.top1_accuracy =
      report.total ? static_cast<double>(report.correct) / static_cast<double>(report.total) : 0.0;
  return report;
}

namespace {

std::string two_decimals(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

}  // namespace

std::string format_prediction(const std::string& gold, std::span<const Ranked> ranking) {
  std::string out = "Target: " + gold + "\nPrediction:";
  bool first = true;
  for (const auto& r : ranking) {
    if (r.probability < 0.005) continue;
    out += (first ? " " : ", ") + r.word + " (" + two_decimals(r.probability) + ")";
    first = false;
  }
  return out + "\n";
}

std::string format_report_text(const EvalReport& report) {
  std::string out;
  for (const auto& r : report.records) out += r.line + "\n" + format_prediction(r.gold, r.ranking) + "\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "top-1 accuracy: %zu/%zu (%.4f)\n", report.correct,
                report.total, report.top1_accuracy);
  return out + buf;
}

std::string format_report_json(const EvalReport& report) {
  json records = json::array();
  for (const auto& r : report.records) {
    json ranking = json::array();
    for (const auto& x : r.ranking) ranking.push_back({{"word", x.word}, {"probability", x.probability}});
    records.push_back({{"line", r.line},
                       {"gold", r.gold},
                       {"hole_type", to_string(r.hole_type)},
                       {"predicted", r.ranking.empty() ? "" : r.ranking.front().word},
                       {"correct", r.correct},
                       {"ranking", std::move(ranking)}});
  }
  return json{{"top1_accuracy", report.top1_accuracy},
              {"correct", report.correct},
              {"total", report.total},
              {"records", std::move(records)}}
             .dump(2) +
         "\n";
}

std::string predict_line(const Model& model, std::string_view line, const Lexicon& lexicon,
                         std::size_t top_k) {
  const MaskedLine masked = parse_masked_line(line);
  const MaskedExample ex = resolve_masked(masked.tokens, masked.gold, lexicon);
  auto ranking = rank(model, ex);
  ranking.resize(std::min(top_k, ranking.size()));
  return format_prediction(ex.gold, ranking);
}

std::string parse_listing(std::span<const std::string> words, const Lexicon& lexicon) {
  const auto parses = parse(words, lexicon);
  if (parses.empty()) return "no parse\n";
  std::string out;
  for (std::size_t k = 0; k < parses.size(); ++k) {
    const Parse& p = parses[k];
    out += "parse " + std::to_string(k + 1) + ":";
    for (std::size_t i = 0; i < p.words.size(); ++i)
      out += (i ? " | " : " ") + p.words[i] + " : " + to_string(p.entry_choice[i]);
    out += "\n  cups:";
    for (const auto& [i, j] : p.matching)
      out += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
    out += "\n";
  }
  return out;
}

}  // namespace funclm
