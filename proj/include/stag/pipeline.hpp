#pragma once

#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "stag/corpus_io.hpp"
#include "stag/decoder.hpp"
#include "stag/evaluation.hpp"
#include "stag/features.hpp"
#include "stag/maxent.hpp"
#include "stag/ngram.hpp"

namespace stag {

enum class Source { Maxent, Interpolation };
std::string_view source_name(Source s);
Source parse_source(const std::string& s);

struct TrainConfig {
  Source source = Source::Maxent;
  std::vector<FeaturePattern> patterns;  // empty: the shipped default set
  int cutoff = 1;
  IisOptions iis;
};

// A trained or loaded model of either kind together with its decoder view.
class Tagger {
 public:
  static Tagger train(const std::vector<TagSequence>& corpus, const TrainConfig& config);
  static Tagger from(MaxentModel model);
  static Tagger from(NgramModel model);
  // Detects the model kind from the file header.
  static Tagger load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  Source kind() const { return kind_; }
  const MaxentModel* maxent() const { return maxent_.get(); }
  const NgramModel* ngram() const { return ngram_.get(); }
  const ProbSource& source() const { return *source_; }
  const StateInventory& inventory() const { return inventory_; }

  ParseResult parse(const std::vector<std::string>& pos,
                    const std::vector<std::optional<std::string>>& words = {},
                    const DecodeOptions& options = {}) const;
  std::vector<ParseResult> parse_batch(const std::vector<PosSequence>& inputs,
                                       const DecodeOptions& options = {}) const;

 private:
  Tagger() = default;
  void attach();

  Source kind_ = Source::Maxent;
  std::shared_ptr<const MaxentModel> maxent_;
  std::shared_ptr<const NgramModel> ngram_;
  std::shared_ptr<const ProbSource> source_;
  StateInventory inventory_;
};

// Treebank mode: one item per extracted chunk. Chunking mode: whole
// sentences with chunks at the top level.
Corpus prepare(const Corpus& corpus, Mode mode, const std::set<std::string>& categories);

std::vector<TagSequence> encode_all(const std::vector<ChunkTree>& trees);

// Decodes the POS projection of every gold item and scores the result.
EvalReport test_tagger(const Tagger& tagger, const std::vector<ChunkTree>& gold, Mode mode);

struct CrossValidation {
  FoldPlan plan;
  std::vector<EvalReport> folds;
  MeanReport mean;
};

// Trains on the complement of each fold and tests on the fold; `prepared`
// is already in the shape given by `mode`.
CrossValidation cross_validate(const Corpus& prepared, const FoldPlan& plan, const TrainConfig& config,
                               Mode mode);

struct CurvePoint {
  std::size_t size = 0;
  MeanReport mean;
};

// For every size, trains on the first `size` training items of each fold
// (in shuffled order) and averages the fold reports.
std::vector<CurvePoint> learning_curve(const Corpus& prepared, const FoldPlan& plan,
                                       const TrainConfig& config, Mode mode,
                                       const std::vector<std::size_t>& sizes);

// Single split version used for the fixed train/test experiments.
std::vector<CurvePoint> learning_curve(const std::vector<ChunkTree>& train,
                                       const std::vector<ChunkTree>& test, const TrainConfig& config,
                                       Mode mode, const std::vector<std::size_t>& sizes);

// Two-column data file: training size and tags accuracy in percent.
void write_curve(const std::filesystem::path& path, const std::vector<CurvePoint>& curve,
                 const std::string& header);

}  // namespace stag
