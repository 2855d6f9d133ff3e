#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "stag/treebank.hpp"

namespace stag {

// Counts behind one accuracy measure. Recall divides by gold items,
// precision by predicted items; tags accuracy uses gold == predicted.
struct Measure {
  long gold = 0;
  long predicted = 0;
  long correct = 0;

  double recall() const { return gold ? double(correct) / double(gold) : 1.0; }
  double precision() const { return predicted ? double(correct) / double(predicted) : 1.0; }
  Measure& operator+=(const Measure& o) {
    gold += o.gold;
    predicted += o.predicted;
    correct += o.correct;
    return *this;
  }
};

// num/den as a percentage rounded half-up to one decimal, in tenths of a
// percent (871 for 87.1%). Exact integer arithmetic.
long percent_tenths(long num, long den);
std::string format_percent(long num, long den);  // "87.1"

Measure tags_accuracy(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred);
Measure bracketing(const std::vector<ChunkTree>& gold, const std::vector<ChunkTree>& pred,
                   bool labelled);
Measure structural_match(const std::vector<ChunkTree>& gold, const std::vector<ChunkTree>& pred);
Measure external_bounds(const std::vector<ChunkTree>& gold, const std::vector<ChunkTree>& pred);

// Unlabelled bracketing of one top-level item with absolute leaf indices,
// e.g. "(0 (1 2))".
std::string unlabelled_structure(const ChunkTree& tree, const ChildRef& item);

enum class Mode { Treebank, Chunking };
std::string_view mode_name(Mode m);
Mode parse_mode(const std::string& s);

struct EvalReport {
  Mode mode = Mode::Treebank;
  long items = 0;  // chunks or sentences
  Measure tags, bracketing, labelled, structural, external;
};

// Tags are compared on `pred_tags` when given (raw decoder output), else on
// the encoding of the predicted trees.
EvalReport evaluate(const std::vector<ChunkTree>& gold, const std::vector<ChunkTree>& pred, Mode mode,
                    const std::vector<TagSequence>* pred_tags = nullptr);

// Arithmetic means of per-report ratios.
struct MeanReport {
  struct Pair {
    double recall = 0.0, precision = 0.0;
  };
  double tags = 0.0;
  Pair bracketing, labelled, structural, external;
  int runs = 0;
};
MeanReport average(const std::vector<EvalReport>& reports);

// Aligned table with total/correct/recall/precision per measure.
void print_table(std::ostream& out, const EvalReport& r);
void print_table(std::ostream& out, const MeanReport& r);
// key=value lines, one per figure.
void print_keyvalues(std::ostream& out, const EvalReport& r, const std::string& prefix = "");
void print_keyvalues(std::ostream& out, const MeanReport& r, const std::string& prefix = "");

}  // namespace stag
