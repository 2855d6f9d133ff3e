#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <tuple>

#include "stag/ngram.hpp"
#include "stag/synthetic.hpp"
#include "support.hpp"

using namespace stag;

namespace {

StructuralTag st(const std::string& t) { return {t, Rel::Other, "NP"}; }

TagSequence seq(std::initializer_list<const char*> tags) {
  TagSequence s;
  for (const char* t : tags) s.push_back(st(t));
  return s;
}

// Counts kept as plain maps keyed by symbol strings; "#" is the padding.
struct Naive {
  std::map<std::string, long> uni;
  std::map<std::pair<std::string, std::string>, long> bi, ctx1;
  std::map<std::tuple<std::string, std::string, std::string>, long> tri, ctx2;
  long n = 0;

  static std::string key(const StructuralTag& s) {
    return s.tag + "/" + std::string(rel_symbol(s.rel)) + "/" + s.cat;
  }

  explicit Naive(const std::vector<TagSequence>& corpus) {
    for (const auto& s : corpus) {
      std::vector<std::string> p = {"#", "#"};
      for (const auto& t : s) p.push_back(key(t));
      for (std::size_t i = 2; i < p.size(); ++i) {
        ++uni[p[i]];
        ++bi[{p[i - 1], p[i]}];
        ++tri[{p[i - 2], p[i - 1], p[i]}];
        ++n;
      }
    }
  }
  long b(const std::string& y, const std::string& z) const {
    auto it = bi.find({y, z});
    return it == bi.end() ? 0 : it->second;
  }
  long t(const std::string& x, const std::string& y, const std::string& z) const {
    auto it = tri.find({x, y, z});
    return it == tri.end() ? 0 : it->second;
  }
  long c1(const std::string& y) const {
    long s = 0;
    for (const auto& [k, c] : bi)
      if (k.first == y) s += c;
    return s;
  }
  long c2(const std::string& x, const std::string& y) const {
    long s = 0;
    for (const auto& [k, c] : tri)
      if (std::get<0>(k) == x && std::get<1>(k) == y) s += c;
    return s;
  }
  long u(const std::string& z) const {
    auto it = uni.find(z);
    return it == uni.end() ? 0 : it->second;
  }

  InterpolationWeights deleted() const {
    auto ratio = [](double a, double b) { return b == 0.0 ? 0.0 : a / b; };
    double l[3] = {0, 0, 0};
    for (const auto& [k, c] : tri) {
      const auto& [x, y, z] = k;
      const double e[3] = {ratio(u(z) - 1.0, n - 1.0), ratio(b(y, z) - 1.0, c1(y) - 1.0),
                           ratio(c - 1.0, c2(x, y) - 1.0)};
      int best = 0;
      for (int o = 1; o < 3; ++o)
        if (e[o] > e[best]) best = o;
      l[best] += static_cast<double>(c);
    }
    const double s = l[0] + l[1] + l[2];
    return {l[0] / s, l[1] / s, l[2] / s};
  }

  double prob(const InterpolationWeights& w, const std::string& x, const std::string& y,
              const std::string& z) const {
    double p = w.l1 * double(u(z)) / double(n);
    if (c1(y) > 0) p += w.l2 * double(b(y, z)) / double(c1(y));
    if (c2(x, y) > 0) p += w.l3 * double(t(x, y, z)) / double(c2(x, y));
    return p;
  }
};

std::string name_of(const NgramTable& t, int id) {
  return id == NgramTable::kBoundary ? "#" : Naive::key(t.state(id));
}

std::vector<TagSequence> random_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TagSequence> out;
  const std::vector<StructuralTag> alphabet = {st("A"), st("B"), {"A", Rel::Same, "NP"}, {"C", Rel::Down, "PP"},
                                               st("D")};
  for (std::size_t s = 0; s < n; ++s) {
    TagSequence q;
    const int len = std::uniform_int_distribution<int>(1, 9)(rng);
    for (int i = 0; i < len; ++i) q.push_back(alphabet[std::uniform_int_distribution<std::size_t>(0, 4)(rng)]);
    out.push_back(q);
  }
  return out;
}

std::vector<TagSequence> synthetic_sequences(std::size_t n) {
  std::vector<TagSequence> out;
  for (const auto& t : chunk_sentences(synthetic_corpus(n, 8), default_chunk_categories()).sentences)
    out.push_back(encode_tree(t));
  return out;
}

}  // namespace

TEST_CASE("hand count of one three-tag sequence") {
  const NgramTable t = NgramTable::count({seq({"A", "B", "C"})});
  CHECK(t.total() == 3);
  CHECK(t.state_count() == 3);
  long uni = 0, bi = 0, tri = 0;
  for (int z = 1; z <= 3; ++z) {
    uni += t.unigram(z);
    for (int y = 0; y <= 3; ++y) {
      bi += t.bigram(y, z);
      for (int x = 0; x <= 3; ++x) tri += t.trigram(x, y, z);
    }
  }
  CHECK(uni == 3);
  CHECK(bi == 3);
  CHECK(tri == 3);
  CHECK(t.trigram(0, 0, t.id(st("A"))) == 1);
  CHECK(t.trigram(0, t.id(st("A")), t.id(st("B"))) == 1);
  CHECK(t.id(st("Z")) == -1);
  CHECK_THROWS(NgramTable::count({TagSequence{}}));
}

TEST_CASE("duplicated corpus doubles every count") {
  const auto c = random_corpus(30, 1);
  auto twice = c;
  twice.insert(twice.end(), c.begin(), c.end());
  const NgramTable a = NgramTable::count(c), b = NgramTable::count(twice);
  CHECK(b.total() == 2 * a.total());
  for (const auto& [y, z, n] : a.bigram_list()) CHECK(b.bigram(int(y), int(z)) == 2 * n);
  for (const auto& [x, y, z, n] : a.trigram_list()) CHECK(b.trigram(int(x), int(y), int(z)) == 2 * n);
}

TEST_CASE("counts match a naive recount on 100 random sequences") {
  const auto c = random_corpus(100, 2);
  const NgramTable t = NgramTable::count(c);
  const Naive n(c);
  CHECK(t.total() == n.n);
  const int ns = static_cast<int>(t.state_count());
  for (int z = 1; z <= ns; ++z) {
    CHECK(t.unigram(z) == n.u(name_of(t, z)));
    for (int y = 0; y <= ns; ++y) {
      CHECK(t.bigram(y, z) == n.b(name_of(t, y), name_of(t, z)));
      for (int x = 0; x <= ns; ++x) CHECK(t.trigram(x, y, z) == n.t(name_of(t, x), name_of(t, y), name_of(t, z)));
    }
  }
  for (int y = 0; y <= ns; ++y) {
    CHECK(t.context1(y) == n.c1(name_of(t, y)));
    for (int x = 0; x <= ns; ++x) CHECK(t.context2(x, y) == n.c2(name_of(t, x), name_of(t, y)));
  }
}

TEST_CASE("count consistency") {
  const NgramTable t = NgramTable::count(synthetic_sequences(200));
  const int ns = static_cast<int>(t.state_count());
  std::map<std::pair<int, int>, long> tri_sum;
  std::map<int, long> bi_sum;
  t.for_each_trigram([&](int x, int y, int, long c) { tri_sum[{x, y}] += c; });
  for (const auto& [y, z, c] : t.bigram_list()) bi_sum[int(y)] += c;
  for (const auto& [xy, s] : tri_sum) CHECK(t.context2(xy.first, xy.second) == s);
  for (int y = 0; y <= ns; ++y) CHECK(t.context1(y) == bi_sum[y]);
  // sum_y f(y, z) = f(z): every token has exactly one predecessor slot
  for (int z = 1; z <= ns; ++z) {
    long s = 0;
    for (int y = 0; y <= ns; ++y) s += t.bigram(y, z);
    CHECK(s == t.unigram(z));
  }
}

TEST_CASE("deleted interpolation matches the formula") {
  for (const auto& corpus : {random_corpus(100, 3), synthetic_sequences(150)}) {
    const NgramTable t = NgramTable::count(corpus);
    const auto w = deleted_interpolation(t);
    const auto o = Naive(corpus).deleted();
    CHECK(w.l1 == doctest::Approx(o.l1).epsilon(1e-14));
    CHECK(w.l2 == doctest::Approx(o.l2).epsilon(1e-14));
    CHECK(w.l3 == doctest::Approx(o.l3).epsilon(1e-14));
    CHECK(w.l1 >= 0.0);
    CHECK(w.l2 >= 0.0);
    CHECK(w.l3 >= 0.0);
    CHECK(std::abs(w.l1 + w.l2 + w.l3 - 1.0) < 1e-12);
  }
}

TEST_CASE("deterministic trigrams put most weight on the trigram term") {
  // z = (x + y) mod 3 with bigram histories that never determine z
  std::vector<TagSequence> corpus;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      TagSequence s;
      int x = a, y = b;
      s.push_back(st(std::to_string(x)));
      s.push_back(st(std::to_string(y)));
      for (int k = 0; k < 28; ++k) {
        const int z = (x + y) % 3;
        s.push_back(st(std::to_string(z)));
        x = y;
        y = z;
      }
      corpus.push_back(s);
      corpus.push_back(s);
    }
  const auto w = deleted_interpolation(NgramTable::count(corpus));
  CHECK(w.l3 > w.l2);
  CHECK(w.l3 > w.l1);
}

TEST_CASE("a single one-tag sentence gives all weight to the unigram") {
  const auto w = deleted_interpolation(NgramTable::count({seq({"A"})}));
  CHECK(w.l1 == 1.0);
  CHECK(w.l2 == 0.0);
  CHECK(w.l3 == 0.0);
  CHECK_THROWS(deleted_interpolation(NgramTable{}));
}

TEST_CASE("interpolated probabilities") {
  const auto corpus = synthetic_sequences(50);
  const NgramTable t = NgramTable::count(corpus);
  const Naive n(corpus);
  const auto w = deleted_interpolation(t);
  const int ns = static_cast<int>(t.state_count());

  SUBCASE("unigram weights give relative frequencies") {
    for (int z = 1; z <= ns; ++z)
      CHECK(interpolated_prob(t, {1, 0, 0}, 0, 0, z) == double(t.unigram(z)) / double(t.total()));
  }
  SUBCASE("sums to one over every seen history") {
    for (int x = 0; x <= ns; ++x)
      for (int y = 0; y <= ns; ++y) {
        if (t.context2(x, y) == 0) continue;
        double s = 0.0;
        for (int z = 1; z <= ns; ++z) s += interpolated_prob(t, w, x, y, z);
        CHECK(std::abs(s - 1.0) < 1e-9);
      }
  }
  SUBCASE("equals the naive reference on all histories") {
    for (int x = 0; x <= ns; ++x)
      for (int y = 0; y <= ns; ++y)
        for (int z = 1; z <= ns; ++z)
          CHECK(interpolated_prob(t, w, x, y, z) ==
                doctest::Approx(n.prob(w, name_of(t, x), name_of(t, y), name_of(t, z))).epsilon(1e-13));
  }
  SUBCASE("unseen trigram history drops the trigram term") {
    int found = 0;
    for (int x = 1; x <= ns && !found; ++x)
      for (int y = 1; y <= ns && !found; ++y)
        if (t.context2(x, y) == 0 && t.context1(y) > 0) {
          ++found;
          for (int z = 1; z <= ns; ++z)
            CHECK(interpolated_prob(t, w, x, y, z) ==
                  doctest::Approx(w.l1 * t.unigram(z) / double(t.total()) +
                                  w.l2 * t.bigram(y, z) / double(t.context1(y))));
        }
    CHECK(found == 1);
  }
  SUBCASE("the decoder distribution is proper for every history") {
    const NgramModel m{t, w};
    std::vector<double> d;
    for (int x : {-1, 0, 1, ns})
      for (int y : {-1, 0, 2, ns}) {
        m.distribution(x, y, d);
        REQUIRE(d.size() == std::size_t(ns));
        double s = 0.0;
        for (double p : d) {
          CHECK(p >= 0.0);
          s += p;
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
      }
  }
}

TEST_CASE("baseline model files round trip") {
  const NgramModel m = train_ngram(synthetic_sequences(80));
  std::stringstream io;
  save_ngram(m, io);
  const std::string text = io.str();
  const NgramModel b = load_ngram(io);
  CHECK(b.weights.l1 == m.weights.l1);
  CHECK(b.weights.l2 == m.weights.l2);
  CHECK(b.weights.l3 == m.weights.l3);
  CHECK(b.table.states() == m.table.states());
  CHECK(b.table.trigram_list() == m.table.trigram_list());
  CHECK(b.table.bigram_list() == m.table.bigram_list());
  CHECK(b.table.total() == m.table.total());
  std::stringstream again;
  save_ngram(b, again);
  CHECK(again.str() == text);
  std::istringstream cut(text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_ngram(cut), NgramModelError);
}
