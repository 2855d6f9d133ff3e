#pragma once

#include <filesystem>
#include <random>
#include <unistd.h>
#include <sstream>
#include <string>
#include <vector>

#include "stag/corpus_io.hpp"
#include "stag/treebank.hpp"

namespace testing {

inline stag::ChunkTree tree(const std::string& text) {
  std::istringstream in(text);
  auto trees = stag::read_bracketed(in, "test");
  if (trees.size() != 1) throw std::runtime_error("expected one tree in: " + text);
  return trees[0];
}

inline std::vector<stag::ChunkTree> trees(const std::string& text) {
  std::istringstream in(text);
  return stag::read_bracketed(in, "test");
}

inline std::filesystem::path data_file(const std::string& name) {
  return std::filesystem::path(STAG_TEST_DATA) / name;
}

// Fresh scratch directory per call.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("stag-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Random depth-bounded tree; not necessarily encodable.
class TreeGen {
 public:
  explicit TreeGen(std::uint64_t seed) : rng_(seed) {}

  stag::ChunkTree operator()(int max_top = 4) {
    stag::ChunkTree t;
    const int items = pick(1, max_top);
    for (int k = 0; k < items; ++k) t.top.push_back(item(t, 0));
    return t;
  }

  // Samples until the tree is inside the codec's exact-inverse class.
  stag::ChunkTree encodable(int max_top = 4) {
    for (;;) {
      auto t = (*this)(max_top);
      if (stag::encodability_violations(t).empty()) return t;
    }
  }

  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  // `depth`: depth of the parent (virtual root = 0).
  stag::ChildRef item(stag::ChunkTree& t, int depth) {
    if (depth + 2 > stag::kMaxDepth || coin(depth == 0 ? 0.3 : 0.55)) {
      t.leaves.push_back({std::nullopt, kTags[pick(0, kTags.size() - 1)], ""});
      return stag::ChildRef::leaf(static_cast<int>(t.leaves.size()) - 1);
    }
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.push_back({kCats[pick(0, kCats.size() - 1)], "", {}});
    const int kids = pick(1, 4);
    for (int k = 0; k < kids; ++k) {
      auto c = item(t, depth + 1);
      t.nodes[id].children.push_back(c);
    }
    return stag::ChildRef::node(id);
  }

  inline static const std::vector<std::string> kTags = {"ART", "NN", "ADJA", "APPR", "NE", "ADV", "VVFIN", "KON"};
  inline static const std::vector<std::string> kCats = {"NP", "PP", "AP"};
  std::mt19937_64 rng_;
};

}  // namespace testing
