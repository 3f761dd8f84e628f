// funclm: parse, train, evaluate and predict with functorial language models.
//
// Exit codes: 0 success, 1 data or configuration error, 2 numerical failure.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "funclm/harness.hpp"

#ifndef FUNCLM_DATA_DIR
#define FUNCLM_DATA_DIR "data"
#endif

namespace {

constexpr int kExitData = 1;
constexpr int kExitNumeric = 2;

std::map<std::string, std::size_t> parse_dims(const std::vector<std::string>& specs) {
  std::map<std::string, std::size_t> out;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
      throw funclm::Error("--dim expects <type>=<k>, got '" + spec + "'");
    std::size_t used = 0;
    long long k = 0;
    try {
      k = std::stoll(spec.substr(eq + 1), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != spec.size() - eq - 1 || k <= 0)
      throw funclm::Error("--dim value must be a positive integer, got '" + spec + "'");
    out[spec.substr(0, eq)] = static_cast<std::size_t>(k);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functorial language models: pregroup parsing, DisCoCat evaluation, "
               "masked-word training"};
  app.require_subcommand(1);

  std::string lexicon_path = std::string(FUNCLM_DATA_DIR) + "/lexicon.json";
  auto add_lexicon = [&](CLI::App* cmd) {
    cmd->add_option("--lexicon", lexicon_path, "Lexicon file")->capture_default_str();
  };

  auto* parse_cmd = app.add_subcommand("parse", "List every parse of a sentence");
  std::vector<std::string> sentence;
  parse_cmd->add_option("sentence", sentence, "Words of the sentence")->required();
  add_lexicon(parse_cmd);

  funclm::RunConfig cfg;
  cfg.train = std::string(FUNCLM_DATA_DIR) + "/train.txt";
  cfg.test = std::string(FUNCLM_DATA_DIR) + "/test.txt";
  cfg.out = "model.json";
  std::vector<std::string> dim_specs;
  bool quiet = false;

  auto* train_cmd = app.add_subcommand("train", "Train encoding matrices by masked-word prediction");
  add_lexicon(train_cmd);
  train_cmd->add_option("--train", cfg.train, "Training corpus")->capture_default_str();
  train_cmd->add_option("--epochs", cfg.epochs, "Full-batch Adam steps")->capture_default_str();
  train_cmd->add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--l1", cfg.l1, "l1 regularization weight")->capture_default_str();
  train_cmd->add_option("--l2", cfg.l2, "l2 regularization weight")->capture_default_str();
  train_cmd->add_option("--seed", cfg.seed, "Initialization seed")->capture_default_str();
  train_cmd->add_option("--dim", dim_specs, "Dimension override <type>=<k> (repeatable)");
  train_cmd->add_option("--out", cfg.out, "Checkpoint path")->capture_default_str();
  train_cmd->add_flag("--quiet", quiet, "Only print the final loss");

  std::string model_path = "model.json";
  std::string report_format = "text";
  auto* eval_cmd = app.add_subcommand("eval", "Top-1 accuracy and predictions on a test corpus");
  add_lexicon(eval_cmd);
  eval_cmd->add_option("--model", model_path, "Checkpoint path")->capture_default_str();
  eval_cmd->add_option("--test", cfg.test, "Test corpus")->capture_default_str();
  eval_cmd->add_option("--top-k", cfg.top_k, "Predictions shown per line")->capture_default_str();
  eval_cmd->add_option("--report", report_format, "Report format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  std::string line;
  auto* predict_cmd = app.add_subcommand("predict", "Predict the missing word of one line");
  add_lexicon(predict_cmd);
  predict_cmd->add_option("--model", model_path, "Checkpoint path")->capture_default_str();
  predict_cmd->add_option("--line", line, "Masked line, e.g. 'cat ? fish (eats)'")->required();
  predict_cmd->add_option("--top-k", cfg.top_k, "Predictions shown")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitData;
  }

  try {
    const funclm::LexiconDocument doc = funclm::load_lexicon(lexicon_path);

    if (*parse_cmd) {
      bool unknown = false;
      for (const auto& w : sentence)
        if (!doc.lexicon.contains(w)) {
          std::cerr << "unknown word: " << w << "\n";
          unknown = true;
        }
      if (unknown) return kExitData;
      std::cout << funclm::parse_listing(sentence, doc.lexicon);
    } else if (*train_cmd) {
      cfg.lexicon = lexicon_path;
      cfg.dims = parse_dims(dim_specs);
      cfg.validate();
      const funclm::DimMap dims = funclm::resolve_dims(doc, cfg.dims);
      const funclm::Corpus corpus = funclm::load_corpus(cfg.train, doc.lexicon);
      const auto batch = corpus.examples();
      const auto result = funclm::train(doc.lexicon, dims, batch,
                                        {cfg.seed, cfg.epochs, cfg.lr, {cfg.l1, cfg.l2}});
      if (!quiet)
        for (std::size_t e = 0; e < result.loss_history.size(); ++e)
          if (e % 50 == 0) std::cout << "epoch " << e << " loss " << result.loss_history[e] << "\n";
      funclm::save_model(result.model, cfg.out);
      std::cout << "final loss " << result.final_loss << "\n"
                << "parameters " << result.model.parameter_count() << "\n"
                << "checkpoint " << cfg.out.string() << "\n";
    } else if (*eval_cmd) {
      const funclm::Model model = funclm::load_model(model_path);
      const funclm::Corpus corpus = funclm::load_corpus(cfg.test, doc.lexicon);
      const auto report = funclm::evaluate(model, corpus, cfg.top_k);
      std::cout << (report_format == "json" ? funclm::format_report_json(report)
                                            : funclm::format_report_text(report));
    } else if (*predict_cmd) {
      const funclm::Model model = funclm::load_model(model_path);
      std::cout << funclm::predict_line(model, line, doc.lexicon, cfg.top_k);
    }
  } catch (const funclm::NonFinite& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const funclm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
