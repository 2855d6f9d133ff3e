// stag: train, apply and evaluate structural-tag partial parsers.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stag/corpus_io.hpp"
#include "stag/evaluation.hpp"
#include "stag/pipeline.hpp"
#include "stag/synthetic.hpp"

using namespace stag;

namespace {

struct Common {
  std::string format = "auto";
  std::string tagset, labels;
  bool no_vocab = false;
  std::string mode = "treebank";
  std::vector<std::string> categories;
};

struct TrainOpts {
  std::string source = "maxent";
  std::string patterns;
  int iterations = 3;
  int cutoff = 1;
  double sigma2 = 0.0;
  double tolerance = 1e-4;
};

Vocabulary vocabulary(const Common& c) {
  if (c.no_vocab) return {};
  Vocabulary v = default_vocabulary();
  if (!c.tagset.empty()) v.tags = load_symbol_file(c.tagset);
  if (!c.labels.empty()) v.labels = load_symbol_file(c.labels);
  return v;
}

Format corpus_format(const std::string& flag, const std::string& path) {
  return flag == "auto" ? format_from_path(path) : parse_format(flag);
}

Corpus load(const Common& c, const std::string& path) {
  return load_corpus(path, corpus_format(c.format, path), vocabulary(c));
}

std::set<std::string> categories(const Common& c) {
  if (c.categories.empty()) return default_chunk_categories();
  return {c.categories.begin(), c.categories.end()};
}

TrainConfig train_config(const TrainOpts& t, Source source) {
  TrainConfig cfg;
  cfg.source = source;
  if (!t.patterns.empty()) cfg.patterns = load_patterns(t.patterns);
  cfg.cutoff = t.cutoff;
  cfg.iis.max_iterations = t.iterations;
  cfg.iis.sigma2 = t.sigma2;
  cfg.iis.tolerance = t.tolerance;
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_mode) {
  app->add_option("--format", c.format, "Corpus format: auto|bracketed|columnar (auto: by extension)")
      ->capture_default_str();
  app->add_option("--tagset", c.tagset, "POS tagset file (default: shipped STTS list)");
  app->add_option("--labels", c.labels, "Phrase label file (default: shipped label list)");
  app->add_flag("--no-vocab-check", c.no_vocab, "Accept any tag and label symbol");
  if (with_mode) {
    app->add_option("--mode", c.mode, "treebank (one item per chunk) or chunking (whole sentences)")
        ->capture_default_str()
        ->check(CLI::IsMember({"treebank", "chunking"}));
    app->add_option("--categories", c.categories, "Chunk categories (default: NP PP AP NM)")
        ->delimiter(',');
  }
}

void add_train(CLI::App* app, TrainOpts& t, bool source_both) {
  auto* src = app->add_option("--source", t.source, "Probability source: maxent or interpolation")
                  ->capture_default_str();
  if (source_both) src->check(CLI::IsMember({"maxent", "interpolation", "both"}));
  else src->check(CLI::IsMember({"maxent", "interpolation"}));
  app->add_option("--patterns", t.patterns, "Feature pattern file (default: shipped 22 patterns)");
  app->add_option("--iterations", t.iterations, "IIS iterations")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--cutoff", t.cutoff, "Minimum feature count")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--sigma2", t.sigma2, "Gaussian prior variance on weights; 0 disables it")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app->add_option("--tolerance", t.tolerance, "Stop when the largest weight update is below this")
      ->capture_default_str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

int cmd_train(const Common& c, const TrainOpts& t, const std::string& input, const std::string& model_path) {
  const Corpus prepared = prepare(load(c, input), parse_mode(c.mode), categories(c));
  const auto seqs = encode_all(prepared.sentences);
  std::cout << "items " << seqs.size() << '\n';
  const Tagger tagger = Tagger::train(seqs, train_config(t, parse_source(t.source)));
  if (const MaxentModel* m = tagger.maxent()) {
    std::cout << "futures " << m->future_count() << '\n' << "features " << m->features().size() << '\n';
    if (m->features().size() == 0)
      std::cerr << "warning: no feature reached the cutoff; the model is uniform\n";
    for (std::size_t k = 0; k < m->info.loglik.size(); ++k)
      std::printf("iteration %zu loglik %.6f\n", k, m->info.loglik[k]);
    if (m->info.clamped_updates) std::cerr << "note: " << m->info.clamped_updates << " weight updates were clamped\n";
  } else {
    const NgramModel* n = tagger.ngram();
    std::printf("states %zu\nlambda %.6f %.6f %.6f\n", n->table.state_count(), n->weights.l1, n->weights.l2,
                n->weights.l3);
  }
  tagger.save(model_path);
  std::cout << "wrote " << model_path << '\n';
  return 0;
}

struct ParseOpts {
  std::string model, input, output, input_format = "auto", output_format, source;
  int beam = 0;
  bool diagnostics = false;
};

int cmd_parse(const ParseOpts& o) {
  const Tagger tagger = Tagger::load(o.model);
  if (!o.source.empty() && parse_source(o.source) != tagger.kind())
    throw std::runtime_error("model " + o.model + " is a " + std::string(source_name(tagger.kind())) +
                             " model, not " + o.source);
  const auto inputs = load_pos(o.input, o.input_format);
  DecodeOptions dopt;
  dopt.beam = o.beam;
  const auto results = tagger.parse_batch(inputs, dopt);

  std::ofstream file;
  if (!o.output.empty()) file = open_out(o.output);
  std::ostream& out = o.output.empty() ? std::cout : file;
  if (o.output_format == "bracketed") {
    std::vector<ChunkTree> trees;
    for (const auto& r : results) trees.push_back(r.decoded.tree);
    write_bracketed(out, trees);
  } else {
    std::vector<TaggedSequence> seqs;
    for (std::size_t s = 0; s < results.size(); ++s) {
      TaggedSequence seq;
      for (std::size_t i = 0; i < results[s].viterbi.tags.size(); ++i)
        seq.push_back({inputs[s].words[i], results[s].viterbi.tags[i]});
      seqs.push_back(std::move(seq));
    }
    write_tagged(out, seqs);
  }
  if (o.diagnostics) {
    for (std::size_t s = 0; s < results.size(); ++s)
      for (const auto& r : results[s].decoded.repairs)
        std::cerr << "sentence " << s + 1 << ": " << repair_name(r.kind) << " at " << r.position << '\n';
  }
  return 0;
}

struct EvalOpts {
  std::string gold, pred, model, report = "table";
};

void print_report(const EvalReport& r, const std::string& how, const std::string& prefix = "") {
  if (how != "kv") print_table(std::cout, r);
  if (how != "table") print_keyvalues(std::cout, r, prefix);
}
void print_report(const MeanReport& r, const std::string& how, const std::string& prefix = "") {
  if (how != "kv") print_table(std::cout, r);
  if (how != "table") print_keyvalues(std::cout, r, prefix);
}

int cmd_evaluate(const Common& c, const EvalOpts& o) {
  if (o.pred.empty() == o.model.empty()) throw std::runtime_error("give exactly one of --pred and --model");
  const Mode mode = parse_mode(c.mode);
  const Corpus gold = prepare(load(c, o.gold), mode, categories(c));
  EvalReport r;
  if (!o.model.empty()) {
    r = test_tagger(Tagger::load(o.model), gold.sentences, mode);
  } else {
    // predictions are taken as they are: already chunked or extracted
    const Corpus pred = load(c, o.pred);
    if (pred.sentences.size() != gold.sentences.size())
      throw std::runtime_error("gold has " + std::to_string(gold.sentences.size()) + " items, prediction " +
                               std::to_string(pred.sentences.size()));
    for (std::size_t s = 0; s < gold.sentences.size(); ++s)
      if (gold.sentences[s].pos() != pred.sentences[s].pos())
        throw std::runtime_error("item " + std::to_string(s + 1) + ": gold and prediction tokens differ");
    r = evaluate(gold.sentences, pred.sentences, mode);
  }
  print_report(r, o.report);
  return 0;
}

struct CrossOpts {
  std::string corpus, curve_prefix, report = "table";
  int folds = 10;
  std::uint64_t seed = 1;
  std::vector<std::size_t> curve;
};

int cmd_crossval(const Common& c, const TrainOpts& t, const CrossOpts& o) {
  const Mode mode = parse_mode(c.mode);
  const Corpus prepared = prepare(load(c, o.corpus), mode, categories(c));
  const FoldPlan plan = make_folds(prepared.sentences.size(), o.folds, o.seed);
  std::vector<Source> sources;
  if (t.source == "both") sources = {Source::Maxent, Source::Interpolation};
  else sources = {parse_source(t.source)};
  std::cout << "# crossval folds=" << o.folds << " seed=" << o.seed << " mode=" << mode_name(mode)
            << " items=" << prepared.sentences.size() << '\n';
  for (Source src : sources) {
    const TrainConfig cfg = train_config(t, src);
    std::cout << "## source " << source_name(src) << '\n';
    const CrossValidation cv = cross_validate(prepared, plan, cfg, mode);
    for (std::size_t f = 0; f < cv.folds.size(); ++f) {
      std::cout << "### fold " << f + 1 << '\n';
      print_report(cv.folds[f], o.report, "fold" + std::to_string(f + 1) + ".");
    }
    std::cout << "### average\n";
    print_report(cv.mean, o.report, "mean.");
    if (!o.curve.empty()) {
      const auto curve = learning_curve(prepared, plan, cfg, mode, o.curve);
      const std::string prefix = o.curve_prefix.empty() ? "curve" : o.curve_prefix;
      const std::string path = prefix + "." + std::string(source_name(src)) + ".dat";
      std::ostringstream header;
      header << "source=" << source_name(src) << " folds=" << o.folds << " seed=" << o.seed
             << " mode=" << mode_name(mode);
      write_curve(path, curve, header.str());
      std::cout << "wrote " << path << '\n';
    }
  }
  return 0;
}

int cmd_extract(const Common& c, const std::string& input, const std::string& output,
                const std::string& out_format) {
  const Corpus chunks = extract_chunks(load(c, input), categories(c));
  const Format f = out_format.empty() ? Format::Columnar : parse_format(out_format);
  if (output.empty()) write_corpus(std::cout, f, chunks);
  else save_corpus(output, f, chunks);
  std::cerr << chunks.sentences.size() << " chunks\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural-tag partial parser: maxent and interpolated-trigram sources"};
  app.set_config("--config", "", "Read options from a TOML/INI file; command-line flags win");
  app.require_subcommand(1);

  Common common;
  TrainOpts topts;

  std::string input, model_path, output, out_format;
  auto* train = app.add_subcommand("train", "Train a model on a treebank or chunk corpus");
  add_common(train, common, true);
  add_train(train, topts, false);
  train->add_option("input", input, "Training corpus")->required()->check(CLI::ExistingFile);
  train->add_option("-m,--model", model_path, "Model file to write")->required();

  ParseOpts popts;
  auto add_parse = [&](CLI::App* sub) {
    sub->add_option("-m,--model", popts.model, "Model file")->required()->check(CLI::ExistingFile);
    sub->add_option("input", popts.input, "POS input (word/POS tokens per line, columnar or bracketed)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--input-format", popts.input_format, "auto|pos|columnar|bracketed")->capture_default_str();
    sub->add_option("-o,--output", popts.output, "Output file (default: stdout)");
    sub->add_option("--output-format", popts.output_format,
                    "columnar or bracketed (default: columnar for parse, bracketed for chunk)")
        ->check(CLI::IsMember({"columnar", "bracketed"}));
    sub->add_option("--source", popts.source, "Expected model kind; an error if the model differs")
        ->check(CLI::IsMember({"maxent", "interpolation"}));
    sub->add_option("--beam", popts.beam, "Beam width; 0 for exact search")->capture_default_str();
    sub->add_flag("--diagnostics", popts.diagnostics, "Report decoder repairs on stderr");
  };
  auto* parse = app.add_subcommand("parse", "Assign internal structure to phrase spans");
  add_parse(parse);
  auto* chunk = app.add_subcommand("chunk", "Chunk whole POS-tagged sentences");
  add_parse(chunk);

  EvalOpts eopts;
  auto* eval = app.add_subcommand("evaluate", "Score predictions (or a model) against a gold corpus");
  add_common(eval, common, true);
  eval->add_option("gold", eopts.gold, "Gold corpus")->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", eopts.pred, "Predicted corpus aligned with the gold items")->check(CLI::ExistingFile);
  eval->add_option("-m,--model", eopts.model, "Decode the gold POS with this model instead")
      ->check(CLI::ExistingFile);
  eval->add_option("--report", eopts.report, "table, kv or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"table", "kv", "both"}));

  CrossOpts copts;
  auto* cross = app.add_subcommand("crossval", "k-fold cross-validation with optional learning curve");
  add_common(cross, common, true);
  add_train(cross, topts, true);
  cross->add_option("corpus", copts.corpus, "Treebank")->required()->check(CLI::ExistingFile);
  cross->add_option("--folds", copts.folds, "Number of folds")->capture_default_str()->check(CLI::Range(2, 1000000));
  cross->add_option("--seed", copts.seed, "Fold shuffling seed")->capture_default_str();
  cross->add_option("--curve", copts.curve, "Training sizes for a learning curve")->delimiter(',');
  cross->add_option("--curve-prefix", copts.curve_prefix, "Curve files: <prefix>.<source>.dat");
  cross->add_option("--report", copts.report, "table, kv or both")
      ->capture_default_str()
      ->check(CLI::IsMember({"table", "kv", "both"}));

  auto* extract = app.add_subcommand("extract-chunks", "Write the chunk corpus of a treebank");
  add_common(extract, common, false);
  extract->add_option("--categories", common.categories, "Chunk categories (default: NP PP AP NM)")
      ->delimiter(',');
  extract->add_option("input", input, "Treebank")->required()->check(CLI::ExistingFile);
  extract->add_option("-o,--output", output, "Output file (default: stdout)");
  extract->add_option("--output-format", out_format, "columnar (default) or bracketed");

  std::size_t synth_n = 3300;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic phrase-grammar treebank");
  synth->add_option("-n,--sentences", synth_n, "Sentence count")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("-o,--output", output, "Output file (default: stdout)");
  synth->add_option("--output-format", out_format, "bracketed (default) or columnar");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(common, topts, input, model_path);
    if (*parse || *chunk) {
      if (popts.output_format.empty()) popts.output_format = *chunk ? "bracketed" : "columnar";
      return cmd_parse(popts);
    }
    if (*eval) return cmd_evaluate(common, eopts);
    if (*cross) return cmd_crossval(common, topts, copts);
    if (*extract) return cmd_extract(common, input, output, out_format);
    if (*synth) {
      const Corpus c = synthetic_corpus(synth_n, synth_seed);
      const Format f = out_format.empty() ? Format::Bracketed : parse_format(out_format);
      if (output.empty()) write_corpus(std::cout, f, c);
      else save_corpus(output, f, c);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
