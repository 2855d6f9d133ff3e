#include "stag/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <fstream>

namespace stag {

std::string_view source_name(Source s) { return s == Source::Maxent ? "maxent" : "interpolation"; }

Source parse_source(const std::string& s) {
  if (s == "maxent") return Source::Maxent;
  if (s == "interpolation") return Source::Interpolation;
  throw std::invalid_argument("unknown source '" + s + "' (expected maxent or interpolation)");
}

void Tagger::attach() {
  if (kind_ == Source::Maxent) {
    source_ = std::make_shared<MaxentSource>(*maxent_);
    inventory_ = StateInventory(maxent_->futures());
  } else {
    source_ = std::make_shared<InterpolationSource>(*ngram_);
    inventory_ = StateInventory(ngram_->table.states());
  }
}

Tagger Tagger::from(MaxentModel model) {
  Tagger t;
  t.kind_ = Source::Maxent;
  t.maxent_ = std::make_shared<const MaxentModel>(std::move(model));
  t.attach();
  return t;
}

Tagger Tagger::from(NgramModel model) {
  Tagger t;
  t.kind_ = Source::Interpolation;
  t.ngram_ = std::make_shared<const NgramModel>(std::move(model));
  t.attach();
  return t;
}

Tagger Tagger::train(const std::vector<TagSequence>& corpus, const TrainConfig& config) {
  if (corpus.empty()) throw std::invalid_argument("cannot train on an empty corpus");
  if (config.source == Source::Interpolation) return from(train_ngram(corpus));
  const auto patterns = config.patterns.empty() ? default_patterns() : config.patterns;
  MaxentModel model = make_model(corpus, patterns, config.cutoff);
  train_iis(model, build_events(corpus, model), config.iis);
  return from(std::move(model));
}

Tagger Tagger::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  std::string magic;
  in >> magic;
  in.close();
  if (magic == kMaxentMagic) return from(load_model(path));
  if (magic == kNgramMagic) return from(load_ngram(path));
  throw std::runtime_error(path.string() + " is not a model file");
}

void Tagger::save(const std::filesystem::path& path) const {
  if (kind_ == Source::Maxent) save_model(*maxent_, path);
  else save_ngram(*ngram_, path);
}

ParseResult Tagger::parse(const std::vector<std::string>& pos,
                          const std::vector<std::optional<std::string>>& words,
                          const DecodeOptions& options) const {
  return parse_span(*source_, inventory_, pos, words, options);
}

std::vector<ParseResult> Tagger::parse_batch(const std::vector<PosSequence>& inputs,
                                             const DecodeOptions& options) const {
  std::vector<ParseResult> out(inputs.size());
  std::vector<std::exception_ptr> errors(inputs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(inputs.size()); ++i) {
    try {
      out[i] = parse(inputs[i].tags, inputs[i].words, options);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Corpus prepare(const Corpus& corpus, Mode mode, const std::set<std::string>& categories) {
  return mode == Mode::Treebank ? extract_chunks(corpus, categories) : chunk_sentences(corpus, categories);
}

std::vector<TagSequence> encode_all(const std::vector<ChunkTree>& trees) {
  std::vector<TagSequence> out;
  out.reserve(trees.size());
  for (const auto& t : trees) out.push_back(encode_tree(t));
  return out;
}

EvalReport test_tagger(const Tagger& tagger, const std::vector<ChunkTree>& gold, Mode mode) {
  std::vector<PosSequence> inputs;
  inputs.reserve(gold.size());
  for (const auto& t : gold) {
    PosSequence p;
    for (const auto& l : t.leaves) {
      p.words.push_back(l.word);
      p.tags.push_back(l.pos);
    }
    inputs.push_back(std::move(p));
  }
  const auto parsed = tagger.parse_batch(inputs);
  std::vector<ChunkTree> trees;
  std::vector<TagSequence> tags;
  for (const auto& r : parsed) {
    trees.push_back(r.decoded.tree);
    tags.push_back(r.viterbi.tags);
  }
  return evaluate(gold, trees, mode, &tags);
}

namespace {

std::vector<ChunkTree> select(const std::vector<ChunkTree>& all, const std::vector<int>& ids) {
  std::vector<ChunkTree> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(all[i]);
  return out;
}

}  // namespace

CrossValidation cross_validate(const Corpus& prepared, const FoldPlan& plan, const TrainConfig& config,
                               Mode mode) {
  if (plan.assignment.size() != prepared.sentences.size())
    throw std::invalid_argument("fold plan does not cover the corpus");
  CrossValidation cv;
  cv.plan = plan;
  for (int f = 0; f < plan.folds; ++f) {
    const auto train = select(prepared.sentences, plan.complement(f));
    const auto test = select(prepared.sentences, plan.members(f));
    const Tagger tagger = Tagger::train(encode_all(train), config);
    cv.folds.push_back(test_tagger(tagger, test, mode));
  }
  cv.mean = average(cv.folds);
  return cv;
}

namespace {

std::vector<EvalReport> curve_reports(const std::vector<ChunkTree>& train,
                                      const std::vector<ChunkTree>& test, const TrainConfig& config,
                                      Mode mode, const std::vector<std::size_t>& sizes) {
  std::vector<EvalReport> out;
  const auto encoded = encode_all(train);
  for (std::size_t n : sizes) {
    if (n == 0 || n > train.size())
      throw std::invalid_argument("training size " + std::to_string(n) + " out of range (have " +
                                  std::to_string(train.size()) + ")");
    const std::vector<TagSequence> part(encoded.begin(), encoded.begin() + static_cast<long>(n));
    out.push_back(test_tagger(Tagger::train(part, config), test, mode));
  }
  return out;
}

}  // namespace

std::vector<CurvePoint> learning_curve(const std::vector<ChunkTree>& train,
                                       const std::vector<ChunkTree>& test, const TrainConfig& config,
                                       Mode mode, const std::vector<std::size_t>& sizes) {
  const auto reports = curve_reports(train, test, config, mode, sizes);
  std::vector<CurvePoint> out;
  for (std::size_t s = 0; s < sizes.size(); ++s) out.push_back({sizes[s], average({reports[s]})});
  return out;
}

std::vector<CurvePoint> learning_curve(const Corpus& prepared, const FoldPlan& plan,
                                       const TrainConfig& config, Mode mode,
                                       const std::vector<std::size_t>& sizes) {
  if (plan.assignment.size() != prepared.sentences.size())
    throw std::invalid_argument("fold plan does not cover the corpus");
  // training items are taken in a seeded shuffled order so that small sizes
  // are not biased towards the start of the corpus
  const auto order = seeded_permutation(prepared.sentences.size(), plan.seed + 1);
  std::vector<int> rank(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) rank[order[k]] = static_cast<int>(k);
  std::vector<std::vector<EvalReport>> per_size(sizes.size());
  for (int f = 0; f < plan.folds; ++f) {
    auto ids = plan.complement(f);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) { return rank[a] < rank[b]; });
    const auto reports = curve_reports(select(prepared.sentences, ids),
                                       select(prepared.sentences, plan.members(f)), config, mode, sizes);
    for (std::size_t s = 0; s < sizes.size(); ++s) per_size[s].push_back(reports[s]);
  }
  std::vector<CurvePoint> out;
  for (std::size_t s = 0; s < sizes.size(); ++s) out.push_back({sizes[s], average(per_size[s])});
  return out;
}

void write_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve,
                 const std::string& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# " << header << "\n# size\ttags_accuracy\n";
  for (const auto& p : curve) out << p.size << '\t' << p.mean.tags * 100.0 << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace stag
