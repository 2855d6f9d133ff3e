#include <doctest.h>
#include <omp.h>

#include <chrono>
#include <functional>
#include <random>

#include "stag/decoder.hpp"
#include "stag/pipeline.hpp"
#include "stag/synthetic.hpp"
#include "support.hpp"

using namespace stag;

namespace {

// Unnormalised log-probs on a half-integer grid, so exact ties are common.
class GridSource final : public ProbSource {
 public:
  GridSource(std::vector<StructuralTag> futures, std::uint64_t seed, int levels)
      : futures_(std::move(futures)), seed_(seed), levels_(levels) {
    std::sort(futures_.begin(), futures_.end());
  }
  std::string name() const override { return "grid"; }
  const std::vector<StructuralTag>& futures() const override { return futures_; }
  std::uint64_t boundary_id() const override { return 1000; }
  std::uint64_t history_id(const StructuralTag& s) const override {
    auto it = std::lower_bound(futures_.begin(), futures_.end(), s);
    return it != futures_.end() && *it == s ? std::uint64_t(it - futures_.begin()) : 2000;
  }
  void log_distribution(std::uint64_t h2, std::uint64_t h1, std::span<double> out) const override {
    for (std::size_t y = 0; y < out.size(); ++y) {
      std::uint64_t h = seed_ ^ (h2 * 0x9E3779B97F4A7C15ull) ^ (h1 * 0xC2B2AE3D27D4EB4Full) ^ (y * 0x165667B19E3779F9ull);
      h ^= h >> 29;
      h *= 0xBF58476D1CE4E5B9ull;
      h ^= h >> 32;
      out[y] = -0.5 * double(h % std::uint64_t(levels_));
    }
  }

 private:
  std::vector<StructuralTag> futures_;
  std::uint64_t seed_;
  int levels_;
};

// Exhaustive search; ties broken by comparing (rel, cat) strings from the
// last position backwards.
TagSequence brute_force(const ProbSource& src, const StateInventory& inv, const std::vector<std::string>& pos,
                        double& best_score) {
  std::vector<std::vector<StructuralTag>> cands;
  for (const auto& p : pos) cands.push_back(inv.candidates(p));
  auto key = [](const StructuralTag& s) { return std::make_pair(std::string(rel_symbol(s.rel)), s.cat); };
  auto smaller = [&](const TagSequence& a, const TagSequence& b) {
    for (std::size_t i = a.size(); i-- > 0;)
      if (key(a[i]) != key(b[i])) return key(a[i]) < key(b[i]);
    return false;
  };
  TagSequence cur, best;
  best_score = -1e300;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == pos.size()) {
      const double s = sequence_score(src, cur);
      if (best.empty() || s > best_score || (s == best_score && smaller(cur, best))) {
        best = cur;
        best_score = s;
      }
      return;
    }
    for (const auto& c : cands[i]) {
      cur.push_back(c);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return best;
}

std::vector<StructuralTag> random_futures(std::mt19937_64& rng) {
  std::vector<StructuralTag> out;
  const std::vector<std::string> cats = {"NP", "PP", "NONE"};
  for (const std::string tag : {"A", "B", "C"}) {
    const int k = std::uniform_int_distribution<int>(1, 4)(rng);
    std::set<std::pair<int, int>> used;
    while (static_cast<int>(used.size()) < k)
      used.insert({std::uniform_int_distribution<int>(0, 6)(rng), std::uniform_int_distribution<int>(0, 2)(rng)});
    for (const auto& [r, c] : used) out.push_back({tag, kAllRels[r], cats[c]});
  }
  return out;
}

Tagger toy_tagger(const std::string& file, Mode mode, Source source = Source::Maxent) {
  const Corpus c = load_corpus(testing::data_file(file), Format::Bracketed, default_vocabulary());
  TrainConfig cfg;
  cfg.source = source;
  cfg.iis.max_iterations = 60;
  return Tagger::train(encode_all(prepare(c, mode, default_chunk_categories()).sentences), cfg);
}

const Tagger& synthetic_tagger() {
  static const Tagger t = [] {
    const Corpus c = synthetic_corpus(300, 12);
    TrainConfig cfg;
    cfg.iis.max_iterations = 10;
    return Tagger::train(encode_all(prepare(c, Mode::Chunking, default_chunk_categories()).sentences), cfg);
  }();
  return t;
}

std::vector<std::vector<std::string>> synthetic_inputs(std::size_t n, std::uint64_t seed) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : synthetic_corpus(n, seed).sentences) out.push_back(t.pos());
  return out;
}

}  // namespace

TEST_CASE("candidates are grouped by POS and ordered by rel then cat") {
  const StateInventory inv({{"ART", Rel::Sibling, "NP"},
                            {"ART", Rel::Other, "PP"},
                            {"ART", Rel::Other, "NP"},
                            {"ART", Rel::Down, "NP"},
                            {"NN", Rel::Same, "NP"}});
  const auto c = inv.candidates("ART");
  REQUIRE(c.size() == 4);
  // "-" < "1" < "=" as strings
  CHECK(c[0] == StructuralTag{"ART", Rel::Down, "NP"});
  CHECK(c[1] == StructuralTag{"ART", Rel::Other, "NP"});
  CHECK(c[2] == StructuralTag{"ART", Rel::Other, "PP"});
  CHECK(c[3] == StructuralTag{"ART", Rel::Sibling, "NP"});
  CHECK(inv.candidates("FOO") == std::vector<StructuralTag>{{"FOO", Rel::Other, "NONE"}});
  CHECK_FALSE(inv.knows("FOO"));
  CHECK(inv.tags() == std::vector<std::string>{"ART", "NN"});
}

TEST_CASE("single-token input") {
  std::mt19937_64 rng(3);
  const GridSource src(random_futures(rng), 5, 4);
  const StateInventory inv(src.futures());
  for (const std::string p : {"A", "B", "C", "Z"}) {
    const auto r = viterbi(src, inv, {p});
    double s = 0;
    CHECK(r.tags == brute_force(src, inv, {p}, s));
    CHECK(r.score == s);
    CHECK(r.candidate_counts == std::vector<int>{static_cast<int>(inv.candidates(p).size())});
  }
  CHECK_THROWS(viterbi(src, inv, {}));
}

TEST_CASE("viterbi agrees with exhaustive search, ties included") {
  std::mt19937_64 rng(9);
  const std::vector<std::string> alphabet = {"A", "B", "C", "Z"};
  for (int trial = 0; trial < 400; ++trial) {
    const GridSource src(random_futures(rng), rng(), trial % 2 ? 3 : 2);
    const StateInventory inv(src.futures());
    std::vector<std::string> pos(std::uniform_int_distribution<int>(1, 6)(rng));
    for (auto& p : pos) p = alphabet[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
    double best = 0;
    const auto want = brute_force(src, inv, pos, best);
    const auto got = viterbi(src, inv, pos);
    CHECK(got.score == best);
    CHECK(got.tags == want);
    CHECK(sequence_score(src, got.tags) == got.score);
  }
}

TEST_CASE("a flat distribution picks the first candidate everywhere") {
  std::mt19937_64 rng(4);
  const GridSource src(random_futures(rng), 0, 1);
  const StateInventory inv(src.futures());
  const std::vector<std::string> pos = {"C", "A", "B", "Z", "A"};
  const auto r = viterbi(src, inv, pos);
  for (std::size_t i = 0; i < pos.size(); ++i) CHECK(r.tags[i] == inv.candidates(pos[i]).front());
}

TEST_CASE("parse_span on the toy corpora") {
  SUBCASE("chunks") {
    const Tagger t = toy_tagger("toy_chunks.trees", Mode::Treebank);
    CHECK(to_bracketed(t.parse({"ART", "NN"}).decoded.tree) == "(NP (ART) (NN))");
    CHECK(to_bracketed(t.parse({"APPR", "ART", "NN"}, {"mit", "der", "Zeit"}).decoded.tree) ==
          "(PP (APPR mit) (NP (ART der) (NN Zeit)))");
    CHECK(to_bracketed(t.parse({"APPR", "ART", "ADJA", "NN"}).decoded.tree) ==
          "(PP (APPR) (NP (ART) (ADJA) (NN)))");
    CHECK_THROWS(t.parse({"ART", "NN"}, {"der"}));
  }
  SUBCASE("sentences keep verbs and punctuation outside chunks") {
    const Tagger t = toy_tagger("toy_sentences.trees", Mode::Chunking);
    const auto r = t.parse({"ART", "NN", "VVFIN", "APPR", "ART", "NN", "$."});
    CHECK(to_bracketed(r.decoded.tree) == "(NP (ART) (NN)) (VVFIN) (PP (APPR) (NP (ART) (NN))) ($.)");
    CHECK(r.decoded.repairs.empty());
  }
  SUBCASE("the baseline on the same data") {
    const Tagger t = toy_tagger("toy_chunks.trees", Mode::Treebank, Source::Interpolation);
    CHECK(to_bracketed(t.parse({"APPR", "ART", "NN"}).decoded.tree) == "(PP (APPR) (NP (ART) (NN)))");
  }
}

TEST_CASE("every input yields a well-formed tree that emits its POS") {
  const Tagger& t = synthetic_tagger();
  std::mt19937_64 rng(6);
  auto tags = t.inventory().tags();
  tags.push_back("UNSEEN");
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> pos(std::uniform_int_distribution<int>(1, 12)(rng));
    for (auto& p : pos) p = tags[std::uniform_int_distribution<std::size_t>(0, tags.size() - 1)(rng)];
    const auto r = t.parse(pos);
    CHECK(validate_tree(r.decoded.tree).empty());
    CHECK(r.decoded.tree.pos() == pos);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      const auto c = t.inventory().candidates(pos[i]);
      CHECK(std::find(c.begin(), c.end(), r.viterbi.tags[i]) != c.end());
    }
  }
}

TEST_CASE("batch decoding is deterministic across thread counts") {
  const Tagger& t = synthetic_tagger();
  const auto inputs = synthetic_inputs(120, 77);
  const auto ref = reference::viterbi_batch(t.source(), t.inventory(), inputs);
  const int saved = omp_get_max_threads();
  for (int threads : {1, 3, 8}) {
    omp_set_num_threads(threads);
    const auto got = viterbi_batch(t.source(), t.inventory(), inputs);
    REQUIRE(got.size() == ref.size());
    for (std::size_t s = 0; s < got.size(); ++s) {
      CHECK(got[s].tags == ref[s].tags);
      CHECK(got[s].score == ref[s].score);
    }
  }
  omp_set_num_threads(saved);
}

TEST_CASE("beam search") {
  const Tagger& t = synthetic_tagger();
  for (const auto& pos : synthetic_inputs(40, 78)) {
    const auto exact = viterbi(t.source(), t.inventory(), pos);
    const auto wide = viterbi(t.source(), t.inventory(), pos, {100000});
    CHECK(wide.tags == exact.tags);
    CHECK(wide.score == exact.score);
    CHECK(viterbi(t.source(), t.inventory(), pos, {2}).score <= exact.score);
  }
}

TEST_CASE("decoding time grows linearly with length") {
  const Tagger& t = synthetic_tagger();
  std::vector<std::string> pool;
  for (const auto& s : synthetic_inputs(2000, 79))
    for (const auto& p : s) pool.push_back(p);
  REQUIRE(pool.size() >= 10100);
  auto per_token = [&](std::size_t len, int reps) {
    double best = 1e300;
    for (int round = 0; round < 3; ++round) {
      const auto start = std::chrono::steady_clock::now();
      for (int r = 0; r < reps; ++r) {
        const std::vector<std::string> pos(pool.begin() + r * 37 % 100, pool.begin() + r * 37 % 100 + long(len));
        viterbi(t.source(), t.inventory(), pos);
      }
      const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
      best = std::min(best, d.count() / double(len * std::size_t(reps)));
    }
    return best;
  };
  // warm the distribution paths before timing
  per_token(100, 5);
  const double short_cost = per_token(100, 100);
  const double long_cost = per_token(10000, 1);
  MESSAGE("per-token seconds: " << short_cost << " at 100, " << long_cost << " at 10000");
  CHECK(long_cost / short_cost < 1.3);
}
