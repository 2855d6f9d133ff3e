#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "stag/treebank.hpp"

namespace stag {

// Attribute bits of one context position.
enum AttrBit : std::uint8_t {
  kAttrRel = 1,
  kAttrTag = 2,
  kAttrCat = 4,
  kAttrRelSibl = 8,
};

inline constexpr int kPrev2 = 0;
inline constexpr int kPrev1 = 1;
inline constexpr int kFuture = 2;

// Which attributes of the trigram context (i-2, i-1, i) a feature looks at.
// A zero mask marks an absent position.
struct FeaturePattern {
  int id = 0;
  std::array<std::uint8_t, 3> mask{};

  int order() const;  // 1, 2 or 3
  friend bool operator==(const FeaturePattern&, const FeaturePattern&) = default;
};

std::string pattern_to_string(const FeaturePattern& p);
FeaturePattern parse_pattern(const std::string& line, int id);
std::vector<FeaturePattern> read_patterns(std::istream& in, const std::string& name = "<stream>");
std::vector<FeaturePattern> load_patterns(const std::filesystem::path& path);
// The shipped 22-pattern set (data/patterns.txt).
std::vector<FeaturePattern> default_patterns();

// Interned structural tag. Ids 0 and 1 of both tables are reserved for the
// BOUNDARY sentinel and for symbols the table has never seen.
struct StateCode {
  std::uint16_t tag = 0;
  std::uint16_t cat = 0;
  std::uint8_t rel = 0;

  friend bool operator==(const StateCode&, const StateCode&) = default;
  std::uint32_t packed() const {
    return (std::uint32_t{tag} << 15) | (std::uint32_t{cat} << 3) | rel;
  }
};

inline constexpr std::uint16_t kBoundaryId = 0;
inline constexpr std::uint16_t kUnknownId = 1;
inline constexpr std::uint8_t kBoundaryRel = 7;
inline constexpr StateCode kBoundary{kBoundaryId, kBoundaryId, kBoundaryRel};
inline constexpr std::size_t kMaxSymbols = 4096;

class SymbolTable {
 public:
  SymbolTable();

  std::uint16_t intern_tag(const std::string& s);
  std::uint16_t intern_cat(const std::string& s);
  std::uint16_t tag_id(const std::string& s) const;
  std::uint16_t cat_id(const std::string& s) const;
  const std::string& tag_name(std::uint16_t id) const { return tags_.at(id); }
  const std::string& cat_name(std::uint16_t id) const { return cats_.at(id); }
  std::size_t tag_count() const { return tags_.size(); }
  std::size_t cat_count() const { return cats_.size(); }

  StateCode intern(const StructuralTag& s);
  StateCode code(const StructuralTag& s) const;
  StructuralTag decode(StateCode c) const;

 private:
  std::vector<std::string> tags_, cats_;
  std::unordered_map<std::string, std::uint16_t> tag_ids_, cat_ids_;
};

// 1 iff the token and its predecessor are siblings (REL = 0).
int rel_sibl(Rel r);
int rel_sibl(const StructuralTag& s);

struct ContextTriple {
  StateCode prev2 = kBoundary;
  StateCode prev1 = kBoundary;
  StateCode future;
};

// Value of `c` restricted to the attributes in `mask`; BOUNDARY yields its
// own value for every attribute.
std::uint32_t project(StateCode c, std::uint8_t mask);
std::uint64_t history_key(const FeaturePattern& p, StateCode prev2, StateCode prev1);
inline std::uint32_t future_key(const FeaturePattern& p, StateCode future) {
  return project(future, p.mask[kFuture]);
}

struct FeatureInstance {
  int pattern = 0;  // index into FeatureSet::patterns()
  std::uint64_t hkey = 0;
  std::uint32_t fkey = 0;
  int count = 0;  // occurrences in the extraction corpus
};

bool is_active(const FeaturePattern& p, const FeatureInstance& f, const ContextTriple& ctx);

// Values constrained by an instance, in pattern order, as symbols.
std::vector<std::string> instance_values(const FeaturePattern& p, const FeatureInstance& f,
                                         const SymbolTable& symbols);
FeatureInstance instance_from_values(const std::vector<FeaturePattern>& patterns, int pattern,
                                     const std::vector<std::string>& values,
                                     const SymbolTable& symbols);

// Padded trigram contexts of a coded sequence.
std::vector<ContextTriple> contexts(const std::vector<StateCode>& seq);

class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::vector<FeaturePattern> patterns, std::vector<FeatureInstance> instances);

  const std::vector<FeaturePattern>& patterns() const { return patterns_; }
  const std::vector<FeatureInstance>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }

  int find(int pattern, std::uint64_t hkey, std::uint32_t fkey) const;
  bool is_active(int id, const ContextTriple& ctx) const {
    return stag::is_active(patterns_[instances_[id].pattern], instances_[id], ctx);
  }
  // Ids of all instances active on ctx, at most one per pattern, in pattern
  // order.
  std::vector<int> active_set(const ContextTriple& ctx) const;

 private:
  struct Key {
    std::uint64_t h;
    std::uint32_t f;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  std::vector<FeaturePattern> patterns_;
  std::vector<FeatureInstance> instances_;
  std::vector<std::unordered_map<Key, int, KeyHash>> index_;
};

// All pattern instantiations seen at least `cutoff` times in the padded
// contexts of `corpus`. Instances are ordered by (pattern, hkey, fkey).
FeatureSet extract_features(const std::vector<std::vector<StateCode>>& corpus,
                            const std::vector<FeaturePattern>& patterns, int cutoff = 1);

}  // namespace stag
