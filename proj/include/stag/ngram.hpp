#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "stag/treebank.hpp"

namespace stag {

struct InterpolationWeights {
  double l1 = 1.0;  // unigram
  double l2 = 0.0;  // bigram
  double l3 = 0.0;  // trigram
};

// Unigram, bigram and trigram counts over atomic structural tags. Sequences
// are padded with two BOUNDARY states in front; there is no end state.
// Relative frequencies divide by how often a history was continued, so
// sum_z f(x,y,z) = context(x,y) and sum_z f(y,z) = context(y) hold exactly.
class NgramTable {
 public:
  static constexpr int kBoundary = 0;

  NgramTable() = default;
  static NgramTable count(const std::vector<TagSequence>& corpus);

  // States 1..n in sorted order; index 0 is BOUNDARY.
  const std::vector<StructuralTag>& states() const { return states_; }
  std::size_t state_count() const { return states_.size(); }
  int id(const StructuralTag& s) const;  // -1 if unseen
  const StructuralTag& state(int id) const { return states_.at(id - 1); }

  long total() const { return total_; }
  long unigram(int z) const;
  long bigram(int y, int z) const;
  long trigram(int x, int y, int z) const;
  long context1(int y) const;
  long context2(int x, int y) const;
  std::size_t trigram_types() const { return tri_.size(); }

  template <typename Fn>
  void for_each_trigram(Fn&& fn) const {
    for (const auto& [k, c] : tri_) fn(static_cast<int>(k >> 40), static_cast<int>((k >> 20) & kMask),
                                       static_cast<int>(k & kMask), c);
  }

  // Raw construction, used by the model reader.
  static NgramTable from_counts(std::vector<StructuralTag> states, std::vector<long> unigrams,
                                const std::vector<std::array<long, 3>>& bigrams,
                                const std::vector<std::array<long, 4>>& trigrams);
  std::vector<std::array<long, 3>> bigram_list() const;   // (y, z, count), sorted
  std::vector<std::array<long, 4>> trigram_list() const;  // (x, y, z, count), sorted

 private:
  static constexpr std::uint64_t kMask = (1u << 20) - 1;
  static std::uint64_t key2(int y, int z) { return (std::uint64_t(y) << 20) | std::uint64_t(z); }
  static std::uint64_t key3(int x, int y, int z) {
    return (std::uint64_t(x) << 40) | (std::uint64_t(y) << 20) | std::uint64_t(z);
  }
  void rebuild_contexts();

  std::vector<StructuralTag> states_;
  std::vector<long> uni_;  // indexed by id, [0] unused
  std::unordered_map<std::uint64_t, long> bi_, tri_, ctx1_, ctx2_;
  long total_ = 0;
};

// Successive-deletion estimate of the interpolation weights. Throws on an
// empty table.
InterpolationWeights deleted_interpolation(const NgramTable& table);

// lambda1 r(z) + lambda2 r(z|y) + lambda3 r(z|x,y); terms whose history was
// never seen contribute 0. Ids as in NgramTable, -1 for unknown states.
double interpolated_prob(const NgramTable& table, const InterpolationWeights& w, int x, int y, int z);

struct NgramModel {
  NgramTable table;
  InterpolationWeights weights;

  // Distribution over states() (index k -> state id k+1), renormalised by the
  // weight of the terms whose history is known, so it sums to 1 for every
  // history.
  void distribution(int x, int y, std::vector<double>& out) const;
};

NgramModel train_ngram(const std::vector<TagSequence>& corpus);

inline constexpr std::string_view kNgramMagic = "stag-ngram";
inline constexpr int kNgramVersion = 1;

class NgramModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_ngram(const NgramModel& model, std::ostream& out);
void save_ngram(const NgramModel& model, const std::filesystem::path& path);
NgramModel load_ngram(std::istream& in);
NgramModel load_ngram(const std::filesystem::path& path);

}  // namespace stag
