#include "stag/synthetic.hpp"

#include <array>
#include <random>
#include <string>
#include <vector>

namespace stag {

namespace {

class Gen {
 public:
  Gen(std::uint64_t seed, const SyntheticOptions& o) : rng_(seed), o_(o) {}

  ChunkTree sentence() {
    while (true) {
      t_ = ChunkTree{};
      build();
      ChunkTree out = canonical(t_);
      if (encodability_violations(out).empty()) return out;
    }
  }

 private:
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(uniform() * double(n)); }
  template <std::size_t N>
  const char* pick(const std::array<const char*, N>& xs) {
    return xs[pick(N)];
  }
  // Zipf-weighted choice: the first entry is the common one, later ones
  // form a long tail.
  template <std::size_t N>
  const char* zipf(const std::array<const char*, N>& xs) {
    double total = 0.0;
    for (std::size_t k = 0; k < N; ++k) total += 1.0 / double((k + 1) * (k + 1));
    double r = uniform() * total;
    for (std::size_t k = 0; k < N; ++k) {
      r -= 1.0 / double((k + 1) * (k + 1));
      if (r < 0.0) return xs[k];
    }
    return xs[N - 1];
  }

  static constexpr std::array<const char*, 6> kDet = {"ART", "PPOSAT", "PDAT", "PIAT", "PIDAT", "PWAT"};
  static constexpr std::array<const char*, 3> kAdj = {"ADJA", "CARD", "PIDAT"};
  static constexpr std::array<const char*, 4> kNoun = {"NN", "NE", "FM", "TRUNC"};
  static constexpr std::array<const char*, 4> kAdv = {"ADV", "PTKNEG", "ADJD", "PWAV"};
  static constexpr std::array<const char*, 3> kPrep = {"APPR", "APPRART", "APPO"};

  ChildRef leaf(const std::string& pos) {
    static const std::array<const char*, 4> words = {"a", "b", "c", "d"};
    t_.leaves.push_back(Leaf{pos + "_" + words[pick(words.size())], pos, ""});
    return ChildRef::leaf(static_cast<int>(t_.leaves.size()) - 1);
  }
  ChildRef node(const std::string& cat, std::vector<ChildRef> children) {
    t_.nodes.push_back(Node{cat, "", std::move(children)});
    return ChildRef::node(static_cast<int>(t_.nodes.size()) - 1);
  }

  // Adjective slot inside an NP at `depth` (depth of the NP node).
  void adjectives(std::vector<ChildRef>& kids, int depth) {
    const int n = static_cast<int>(pick(5)) - 2;  // mostly none
    for (int k = 0; k < n; ++k) {
      if (depth + 1 < kMaxDepth && chance(o_.adjective_phrase)) {
        std::vector<ChildRef> ap{leaf(zipf(kAdv))};
        ap.push_back(leaf(zipf(kAdj)));
        kids.push_back(node("AP", std::move(ap)));
      } else {
        kids.push_back(leaf(zipf(kAdj)));
      }
    }
  }

  // NP whose node sits at `depth` below the root.
  ChildRef np(int depth) {
    std::vector<ChildRef> kids;
    const double r = uniform();
    if (r < 0.12) {
      kids.push_back(leaf("PPER"));
      return node("NP", std::move(kids));
    }
    if (r < 0.22) {
      kids.push_back(leaf("NE"));
      if (chance(0.3)) kids.push_back(leaf("NE"));
      return node("NP", std::move(kids));
    }
    const double d = uniform();
    if (d < 0.75) kids.push_back(leaf(zipf(kDet)));
    else if (d < 0.85) kids.push_back(leaf("CARD"));
    adjectives(kids, depth);
    kids.push_back(leaf(zipf(kNoun)));
    if (chance(0.08)) {
      kids.push_back(leaf("KON"));
      if (chance(0.6)) kids.push_back(leaf(zipf(kDet)));
      kids.push_back(leaf(zipf(kNoun)));
    }
    // postmodifiers; their leaves must stay within the depth bound
    if (depth + 2 <= kMaxDepth && chance(o_.genitive)) kids.push_back(np_simple(depth + 1, "ART"));
    else if (depth + 3 <= kMaxDepth && chance(o_.pp_attach)) kids.push_back(pp(depth + 1));
    return node("NP", std::move(kids));
  }

  // Determiner + noun NP used as genitive or as the object of an ambiguous
  // attachment.
  ChildRef np_simple(int depth, const char* det) {
    std::vector<ChildRef> kids{leaf(det)};
    if (depth + 1 < kMaxDepth && chance(0.3)) kids.push_back(leaf(zipf(kAdj)));
    kids.push_back(leaf(zipf(kNoun)));
    return node("NP", std::move(kids));
  }

  ChildRef pp(int depth) {
    std::vector<ChildRef> kids;
    const double r = uniform();
    if (r < 0.3) {
      kids.push_back(leaf("APPRART"));
      adjectives(kids, depth);
      kids.push_back(leaf(zipf(kNoun)));
    } else if (r < 0.4) {
      kids.push_back(leaf("APPR"));
      kids.push_back(leaf(chance(0.5) ? "NE" : "CARD"));
    } else if (r < 0.47) {
      kids.push_back(leaf("APPR"));
      kids.push_back(leaf("PPER"));
    } else {
      kids.push_back(leaf(zipf(kPrep)));
      if (depth + 2 <= kMaxDepth) kids.push_back(np(depth + 1));
      else kids.push_back(leaf(zipf(kNoun)));
    }
    return node("PP", std::move(kids));
  }

  ChildRef ap_pred() {
    std::vector<ChildRef> kids;
    if (chance(0.5)) kids.push_back(leaf(zipf(kAdv)));
    kids.push_back(leaf("ADJD"));
    return node("AP", std::move(kids));
  }

  void object_slot() {
    const double r = uniform();
    if (r < 0.45) {
      t_.top.push_back(np(1));
    } else if (r < 0.8) {
      t_.top.push_back(pp(1));
    } else if (r < 0.9) {
      t_.top.push_back(leaf("ADV"));
    } else {
      t_.top.push_back(ap_pred());
    }
  }

  void build() {
    static const std::array<const char*, 3> finite = {"VVFIN", "VAFIN", "VMFIN"};
    if (chance(0.25)) t_.top.push_back(pp(1));
    else t_.top.push_back(np(1));
    t_.top.push_back(leaf(pick(finite)));
    const int objects = 1 + static_cast<int>(pick(3));
    for (int k = 0; k < objects; ++k) object_slot();
    if (chance(0.3)) t_.top.push_back(leaf(chance(0.5) ? "VVPP" : "VVINF"));
    if (chance(0.15)) {
      t_.top.push_back(leaf("$,"));
      t_.top.push_back(leaf("KON"));
      t_.top.push_back(np(1));
      t_.top.push_back(leaf("VVFIN"));
      object_slot();
    }
    t_.top.push_back(leaf("$."));
  }

  std::mt19937_64 rng_;
  SyntheticOptions o_;
  ChunkTree t_;
};

}  // namespace

Corpus synthetic_corpus(std::size_t sentences, std::uint64_t seed, const SyntheticOptions& options) {
  Gen g(seed, options);
  Corpus c;
  c.sentences.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    c.sentences.push_back(g.sentence());
    for (const auto& l : c.sentences.back().leaves) c.tagset.insert(l.pos);
    for (const auto& n : c.sentences.back().nodes) c.labelset.insert(n.cat);
  }
  return c;
}

}  // namespace stag
