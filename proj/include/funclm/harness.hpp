#pragma once

// Corpus ingestion, the train / evaluate / predict pipeline, and report
// formatting shared by the CLI and the test suites.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "funclm/errors.hpp"
#include "funclm/grammar.hpp"
#include "funclm/optim.hpp"
#include "funclm/semantics.hpp"

namespace funclm {

/// One corpus line: `tokens with a single ? (gold)`.
struct MaskedLine {
  std::vector<std::string> tokens;
  std::size_t hole_index = 0;
  std::string gold;

  bool operator==(const MaskedLine&) const = default;
};

/// Throws FormatError describing what is wrong with the line.
MaskedLine parse_masked_line(std::string_view line);
std::string format_masked_line(const MaskedLine& line);

struct CorpusEntry {
  std::string line;
  MaskedExample example;
};

struct Corpus {
  std::string source;
  std::vector<CorpusEntry> entries;

  std::vector<MaskedExample> examples() const;
};

/// Every bad line of a corpus file, reported together.
class CorpusError : public Error {
 public:
  enum class Kind { MalformedLine, Unparsable, UnknownWord };
  struct Problem {
    std::size_t lineno;
    Kind kind;
    std::string message;
  };

  CorpusError(std::string source, std::vector<Problem> problems);
  const std::vector<Problem>& problems() const noexcept { return problems_; }

 private:
  std::vector<Problem> problems_;
};

/// Blank lines are skipped; any other line that fails to parse or resolve is
/// collected into a CorpusError. Throws IoError.
Corpus load_corpus(const std::filesystem::path& path, const Lexicon& lexicon);
Corpus parse_corpus(std::string_view text, const Lexicon& lexicon,
                    std::string source = "<memory>");

struct RunConfig {
  std::filesystem::path lexicon;
  std::filesystem::path train;
  std::filesystem::path test;
  std::uint64_t seed = 0;
  std::size_t epochs = 500;
  double lr = 5e-2;
  double l1 = 1e-1;
  double l2 = 5e-2;
  std::map<std::string, std::size_t> dims;  // overrides on top of the lexicon file
  std::filesystem::path out;
  std::size_t top_k = 3;

  /// Throws Error on non-finite or out-of-range values.
  void validate() const;
};

/// Defaults (s = 1, n = 7), then the lexicon file, then explicit overrides.
DimMap resolve_dims(const LexiconDocument& doc, const std::map<std::string, std::size_t>& overrides);

/// Per-type initialization seed; stable under adding or removing other types.
std::uint64_t type_seed(std::uint64_t seed, const PregroupType& t);

/// Every E_t drawn by svd_init with its type seed.
Model initialize(const Lexicon& lexicon, const DimMap& dims, std::uint64_t seed);

struct TrainOptions {
  std::uint64_t seed = 0;
  std::size_t epochs = 500;
  double lr = 5e-2;
  LossConfig loss;
};

struct TrainResult {
  Model model;
  std::vector<double> loss_history;  // loss before each update
  double final_loss = 0.0;           // loss of the returned model
};

/// Full-batch Adam from the seeded initialization. Throws NonFinite.
TrainResult train(const Lexicon& lexicon, const DimMap& dims,
                  std::span<const MaskedExample> batch, const TrainOptions& opts);

/// Loads lexicon and training corpus, trains, and writes cfg.out if set.
TrainResult train(const RunConfig& cfg);

struct Ranked {
  std::string word;
  double probability = 0.0;
};

/// All of V_t by decreasing probability; ties go to the lexicographically
/// first word.
std::vector<Ranked> rank(const Model& model, const MaskedExample& ex);

struct EvalRecord {
  std::string line;
  std::string gold;
  PregroupType hole_type;
  std::vector<Ranked> ranking;  // top-k
  bool correct = false;
};

struct EvalReport {
  std::vector<EvalRecord> records;
  std::size_t correct = 0;
  std::size_t total = 0;
  double top1_accuracy = 0.0;
};

EvalReport evaluate(const Model& model, const Corpus& corpus, std::size_t top_k = 3);

/// "Target: w" and "Prediction: w1 (0.60), ..." lines; entries below 0.005
/// are dropped and probabilities are printed with two decimals.
std::string format_prediction(const std::string& gold, std::span<const Ranked> ranking);
std::string format_report_text(const EvalReport& report);
std::string format_report_json(const EvalReport& report);

/// Resolves one masked line and formats its prediction.
std::string predict_line(const Model& model, std::string_view line, const Lexicon& lexicon,
                         std::size_t top_k = 3);

/// Entry choices and cups of every parse, or "no parse".
std::string parse_listing(std::span<const std::string> words, const Lexicon& lexicon);

}  // namespace funclm
