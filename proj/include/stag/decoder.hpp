#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stag/maxent.hpp"
#include "stag/ngram.hpp"
#include "stag/treebank.hpp"

namespace stag {

// Contextual probabilities p(s_i | s_{i-2}, s_{i-1}) over a fixed future
// inventory. Histories are opaque ids so that decoders can cache
// distributions without hashing strings.
class ProbSource {
 public:
  virtual ~ProbSource() = default;
  virtual std::string name() const = 0;
  virtual const std::vector<StructuralTag>& futures() const = 0;
  virtual std::uint64_t boundary_id() const = 0;
  // Any state, including ones outside futures().
  virtual std::uint64_t history_id(const StructuralTag& s) const = 0;
  // log p(y | h2, h1) for every y in futures(), in inventory order.
  virtual void log_distribution(std::uint64_t h2, std::uint64_t h1, std::span<double> out) const = 0;
};

class MaxentSource final : public ProbSource {
 public:
  explicit MaxentSource(const MaxentModel& model) : model_(model) {}
  std::string name() const override { return "maxent"; }
  const std::vector<StructuralTag>& futures() const override { return model_.futures(); }
  std::uint64_t boundary_id() const override { return kBoundary.packed(); }
  std::uint64_t history_id(const StructuralTag& s) const override {
    return model_.symbols().code(s).packed();
  }
  void log_distribution(std::uint64_t h2, std::uint64_t h1, std::span<double> out) const override;

 private:
  const MaxentModel& model_;
};

class InterpolationSource final : public ProbSource {
 public:
  explicit InterpolationSource(const NgramModel& model);
  std::string name() const override { return "interpolation"; }
  const std::vector<StructuralTag>& futures() const override { return model_.table.states(); }
  std::uint64_t boundary_id() const override { return NgramTable::kBoundary; }
  std::uint64_t history_id(const StructuralTag& s) const override;
  void log_distribution(std::uint64_t h2, std::uint64_t h1, std::span<double> out) const override;

 private:
  const NgramModel& model_;
};

// Futures grouped by the POS tag they emit.
class StateInventory {
 public:
  StateInventory() = default;
  explicit StateInventory(const std::vector<StructuralTag>& futures);

  // Future indices emitting `pos`, ordered by (rel, cat) symbol strings.
  const std::vector<int>& indices(const std::string& pos) const;
  // Candidate states; the singleton <pos, 1, NONE> for an unseen tag.
  std::vector<StructuralTag> candidates(const std::string& pos) const;
  std::size_t tag_count() const { return groups_.size(); }
  bool knows(const std::string& pos) const { return groups_.contains(pos); }
  std::vector<std::string> tags() const;
  const std::vector<StructuralTag>& futures() const { return futures_; }

 private:
  std::vector<StructuralTag> futures_;
  std::map<std::string, std::vector<int>> groups_;
};

StructuralTag fallback_state(const std::string& pos);

struct DecodeOptions {
  int beam = 0;  // max pair-states kept per position; 0 = exact search
};

struct ViterbiResult {
  TagSequence tags;
  double score = 0.0;                 // sum of log p over the sequence
  std::vector<int> candidate_counts;  // per position
};

// Best structural-tag sequence for a POS sequence. Among equal-scoring
// sequences the one with the smallest (rel, cat) at the last position wins,
// then at the one before, and so on.
ViterbiResult viterbi(const ProbSource& source, const StateInventory& inventory,
                      const std::vector<std::string>& pos, const DecodeOptions& options = {});

// Sum of log p(s_i | s_{i-2}, s_{i-1}) for a full sequence; states outside
// the inventory score 0 like the decoder's fallback.
double sequence_score(const ProbSource& source, const TagSequence& seq);

struct ParseResult {
  ViterbiResult viterbi;
  DecodeResult decoded;  // tree with word forms filled in
};

ParseResult parse_span(const ProbSource& source, const StateInventory& inventory,
                       const std::vector<std::string>& pos,
                       const std::vector<std::optional<std::string>>& words = {},
                       const DecodeOptions& options = {});

// Many sentences at once; parallel over sentences.
std::vector<ViterbiResult> viterbi_batch(const ProbSource& source, const StateInventory& inventory,
                                         const std::vector<std::vector<std::string>>& inputs,
                                         const DecodeOptions& options = {});

namespace reference {
std::vector<ViterbiResult> viterbi_batch(const ProbSource& source, const StateInventory& inventory,
                                         const std::vector<std::vector<std::string>>& inputs,
                                         const DecodeOptions& options = {});
}  // namespace reference

}  // namespace stag
