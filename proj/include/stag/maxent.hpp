#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "stag/features.hpp"
#include "stag/treebank.hpp"

namespace stag {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Observed (history, future) events. Histories are distinct (s_{i-2}, s_{i-1})
// pairs; futures are indices into the model's future inventory.
struct EventSpace {
  struct History {
    StateCode prev2;
    StateCode prev1;
    long count = 0;
    std::vector<std::pair<int, long>> futures;  // (future index, count), sorted
  };
  std::vector<History> histories;
  long total = 0;
};

struct IisOptions {
  int max_iterations = 3;
  double tolerance = 1e-4;  // stop when max |delta| falls below
  double max_delta = 20.0;  // per-iteration update clamp
  double sigma2 = 0.0;      // Gaussian prior variance per weight; 0 disables it
};

struct TrainingInfo {
  int iterations = 0;
  int cutoff = 1;
  bool converged = false;
  long clamped_updates = 0;
  std::vector<double> loglik;     // mean conditional log-likelihood, [0] before training
  std::vector<double> max_delta;  // per iteration
};

// Conditional maximum-entropy model p(y | s_{i-2}, s_{i-1}) over the future
// inventory Y. Immutable apart from its weights.
class MaxentModel {
 public:
  MaxentModel() = default;
  // `futures` is sorted and deduplicated; the symbol table is built from it.
  MaxentModel(std::vector<StructuralTag> futures, std::vector<FeaturePattern> patterns);

  const std::vector<StructuralTag>& futures() const { return futures_; }
  const std::vector<StateCode>& future_codes() const { return future_codes_; }
  std::size_t future_count() const { return futures_.size(); }
  int future_index(StateCode c) const;
  int future_index(const StructuralTag& s) const { return future_index(symbols_.code(s)); }

  const SymbolTable& symbols() const { return symbols_; }
  const std::vector<FeaturePattern>& patterns() const { return features_.patterns(); }
  const FeatureSet& features() const { return features_; }
  const std::vector<double>& weights() const { return weights_; }

  // Installs an instance set (weights reset to 0 unless given).
  void set_features(FeatureSet features, std::vector<double> weights = {});
  void set_weights(std::vector<double> w);

  // log p(y | prev2, prev1) for every y in futures(), in inventory order.
  void log_distribution(StateCode prev2, StateCode prev1, std::span<double> out) const;
  std::vector<double> log_distribution(StateCode prev2, StateCode prev1) const;

  double conditional_prob(StateCode prev2, StateCode prev1, StateCode future) const;

  // Feature ids whose history part matches, grouped per future class:
  // calls fn(future index, feature id) for every active (y, f) pair.
  template <typename Fn>
  void for_each_active(StateCode prev2, StateCode prev1, Fn&& fn) const;

  TrainingInfo info;

 private:
  void build_index();

  struct PatternIndex {
    std::vector<int> future_class;          // per future
    std::vector<int> class_offset;          // CSR over class members
    std::vector<int> class_members;
    std::unordered_map<std::uint64_t, std::pair<int, int>> by_history;  // -> range in entries
    std::vector<std::pair<int, int>> entries;                          // (class, feature id)
  };

  std::vector<StructuralTag> futures_;
  std::vector<StateCode> future_codes_;
  std::unordered_map<std::uint32_t, int> future_ids_;
  SymbolTable symbols_;
  FeatureSet features_;
  std::vector<double> weights_;
  std::vector<PatternIndex> index_;
};

template <typename Fn>
void MaxentModel::for_each_active(StateCode prev2, StateCode prev1, Fn&& fn) const {
  const auto& pats = features_.patterns();
  for (std::size_t p = 0; p < pats.size(); ++p) {
    const PatternIndex& px = index_[p];
    auto it = px.by_history.find(history_key(pats[p], prev2, prev1));
    if (it == px.by_history.end()) continue;
    for (int e = it->second.first; e < it->second.second; ++e) {
      const auto [cls, fid] = px.entries[e];
      for (int m = px.class_offset[cls]; m < px.class_offset[cls + 1]; ++m)
        fn(px.class_members[m], fid);
    }
  }
}

// Future inventory of a corpus: distinct structural tags, sorted.
std::vector<StructuralTag> future_inventory(const std::vector<TagSequence>& corpus);

std::vector<std::vector<StateCode>> encode_corpus(const std::vector<TagSequence>& corpus,
                                                  const SymbolTable& symbols);

// Model over the corpus' futures with all pattern instances seen at least
// `cutoff` times; weights start at 0.
MaxentModel make_model(const std::vector<TagSequence>& corpus,
                       const std::vector<FeaturePattern>& patterns, int cutoff = 1);

EventSpace build_events(const std::vector<TagSequence>& corpus, const MaxentModel& model);

// Mean conditional log-likelihood of the events.
double log_likelihood(const MaxentModel& model, const EventSpace& events);

// Empirical and model expectations of every feature, normalised by the
// event count.
std::vector<double> empirical_expectations(const MaxentModel& model, const EventSpace& events);
std::vector<double> expected_counts(const MaxentModel& model, const EventSpace& events);

// Improved Iterative Scaling on the conditional likelihood. Expectation
// passes run in parallel; results do not depend on the thread count.
TrainingInfo train_iis(MaxentModel& model, const EventSpace& events, const IisOptions& options);

// Root of  sum_m a[m] e^{delta m} + (lambda + delta) / sigma2 = target,
// clamped to [-max_delta, max_delta]. `a` holds (m, mass) pairs with m > 0;
// masses and target are per event, so sigma2 here is the prior variance
// times the event count. sigma2 = 0 drops the prior term.
double solve_iis_update(std::span<const std::pair<int, double>> a, double target, double lambda,
                        double sigma2, double max_delta, bool* clamped = nullptr);

// Serial reference implementations, kept for testing and benchmarks.
namespace reference {
std::vector<double> expected_counts(const MaxentModel& model, const EventSpace& events);
double log_likelihood(const MaxentModel& model, const EventSpace& events);
TrainingInfo train_iis(MaxentModel& model, const EventSpace& events, const IisOptions& options);
}  // namespace reference

inline constexpr std::string_view kMaxentMagic = "stag-maxent";
inline constexpr int kMaxentVersion = 1;

void save_model(const MaxentModel& model, std::ostream& out);
void save_model(const MaxentModel& model, const std::filesystem::path& path);
MaxentModel load_model(std::istream& in);
MaxentModel load_model(const std::filesystem::path& path);

}  // namespace stag
