#include <doctest.h>

#include <random>

#include "stag/features.hpp"
#include "stag/maxent.hpp"
#include "stag/synthetic.hpp"
#include "support.hpp"

using namespace stag;

namespace {

// Values a pattern sees on a context, rendered as symbols independently of
// the packed keys.
std::vector<std::string> context_values(const FeaturePattern& p, const ContextTriple& ctx,
                                        const SymbolTable& sym) {
  std::vector<std::string> out;
  const StateCode pos[3] = {ctx.prev2, ctx.prev1, ctx.future};
  for (int k = 0; k < 3; ++k) {
    const StateCode c = pos[k];
    const bool b = c == kBoundary;
    const std::uint8_t m = p.mask[k];
    if (m & kAttrRel) out.push_back(b ? "<s>" : std::string(rel_symbol(static_cast<Rel>(c.rel))));
    if (m & kAttrRelSibl) out.push_back(b ? "<s>" : (c.rel == 0 ? "1" : "0"));
    if (m & kAttrTag) out.push_back(b ? "<s>" : sym.tag_name(c.tag));
    if (m & kAttrCat) out.push_back(b ? "<s>" : sym.cat_name(c.cat));
  }
  return out;
}

struct Toy {
  MaxentModel model;
  std::vector<std::vector<StateCode>> coded;
  explicit Toy(std::size_t n, int cutoff = 1) {
    std::vector<TagSequence> corpus;
    const Corpus c = synthetic_corpus(n, 21);
    for (const auto& t : c.sentences) corpus.push_back(encode_tree(t));
    model = make_model(corpus, default_patterns(), cutoff);
    coded = encode_corpus(corpus, model.symbols());
  }
};

}  // namespace

TEST_CASE("rel_sibl") {
  CHECK(rel_sibl(Rel::Same) == 1);
  CHECK(rel_sibl(Rel::Up) == 0);
  CHECK(rel_sibl(Rel::Other) == 0);
  for (Rel r : kAllRels) CHECK(rel_sibl(r) == (r == Rel::Same ? 1 : 0));
}

TEST_CASE("default pattern set") {
  const auto ps = default_patterns();
  REQUIRE(ps.size() == 22);
  int by_order[4] = {0, 0, 0, 0};
  for (const auto& p : ps) {
    ++by_order[p.order()];
    CHECK(p.mask[kFuture] != 0);
    for (int k = 0; k < 3; ++k) CHECK_FALSE(((p.mask[k] & kAttrRel) && (p.mask[k] & kAttrRelSibl)));
  }
  CHECK(by_order[3] == 11);
  CHECK(by_order[2] == 8);
  CHECK(by_order[1] == 3);
  CHECK(pattern_to_string(ps[0]) == "r,t,c | r,t,c | r,t,c");
  for (const auto& p : ps) CHECK(parse_pattern(pattern_to_string(p), p.id) == p);
}

TEST_CASE("pattern syntax errors") {
  // fewer positions are right-aligned on the future
  CHECK(parse_pattern("r,t | r,t,c", 1) == parse_pattern("- | r,t | r,t,c", 1));
  CHECK_THROWS(parse_pattern("r | r | r | r", 1));
  CHECK_THROWS(parse_pattern("r,t | r,t | -", 1));
  CHECK_THROWS(parse_pattern("r,r~sibl | r | r", 1));
  CHECK_THROWS(parse_pattern("q | r | r", 1));
}

TEST_CASE("activation by unification") {
  SymbolTable sym;
  const StateCode art = sym.intern({"ART", Rel::Other, "NP"});
  const StateCode adja = sym.intern({"ADJA", Rel::Same, "NP"});
  const StateCode nn = sym.intern({"NN", Rel::Same, "NP"});
  const StateCode nn_pp = sym.intern({"NN", Rel::Same, "PP"});
  const StateCode appr = sym.intern({"APPR", Rel::Other, "PP"});
  std::vector<FeaturePattern> ps = {parse_pattern("- | r,t | r,t,c", 1), parse_pattern("- | - | r,t,c", 2)};

  // {i-1: TAG=ADJA, REL=0; i: REL=0, TAG=NN, CAT=NP}
  const FeatureInstance f = instance_from_values(ps, 0, {"0", "ADJA", "0", "NN", "NP"}, sym);
  CHECK(is_active(ps[0], f, {art, adja, nn}));
  CHECK(is_active(ps[0], f, {appr, adja, nn}));
  CHECK(is_active(ps[0], f, {kBoundary, adja, nn}));
  CHECK_FALSE(is_active(ps[0], f, {art, adja, nn_pp}));

  const FeatureInstance u = instance_from_values(ps, 1, {"1", "APPR", "PP"}, sym);
  for (StateCode h : {kBoundary, art, adja, nn_pp})
    CHECK(is_active(ps[1], u, {h, h, appr}) == is_active(ps[1], u, {kBoundary, kBoundary, appr}));
  CHECK(is_active(ps[1], u, {art, nn, appr}));

  SUBCASE("BOUNDARY only matches an explicit BOUNDARY value") {
    const FeatureInstance b = instance_from_values(ps, 0, {"<s>", "<s>", "1", "APPR", "PP"}, sym);
    CHECK(is_active(ps[0], b, {kBoundary, kBoundary, appr}));
    CHECK_FALSE(is_active(ps[0], b, {kBoundary, art, appr}));
    CHECK_FALSE(is_active(ps[0], f, {art, kBoundary, nn}));
  }
}

TEST_CASE("extraction and cutoff") {
  SymbolTable sym;
  const std::vector<StateCode> s = {sym.intern({"ART", Rel::Other, "NP"}), sym.intern({"NN", Rel::Same, "NP"}),
                                    sym.intern({"NN", Rel::Same, "NP"})};
  const std::vector<FeaturePattern> uni = {parse_pattern("- | - | r,t,c", 1)};
  const FeatureSet one = extract_features({s}, uni, 1);
  CHECK(one.size() == 2);  // the two NN tokens merge
  const FeatureSet two = extract_features({s}, uni, 2);
  REQUIRE(two.size() == 1);
  CHECK(two.instances()[0].count == 2);
  CHECK(extract_features({s}, uni, 3).size() == 0);
}

TEST_CASE("active_set matches brute force on random contexts") {
  const Toy toy(200);
  const FeatureSet& fs = toy.model.features();
  const SymbolTable& sym = toy.model.symbols();
  std::vector<std::vector<std::string>> inst_values;
  for (const auto& f : fs.instances()) inst_values.push_back(instance_values(fs.patterns()[f.pattern], f, sym));

  std::mt19937_64 rng(1);
  const auto& ys = toy.model.future_codes();
  auto any = [&]() -> StateCode {
    const auto k = std::uniform_int_distribution<std::size_t>(0, ys.size())(rng);
    return k == ys.size() ? kBoundary : ys[k];
  };
  for (int trial = 0; trial < 1000; ++trial) {
    ContextTriple ctx{any(), any(), ys[std::uniform_int_distribution<std::size_t>(0, ys.size() - 1)(rng)]};
    if (trial % 4 == 0) {
      // contexts from training data activate something for every pattern
      const auto& seq = toy.coded[trial % toy.coded.size()];
      const auto cs = contexts(seq);
      ctx = cs[trial % cs.size()];
    }
    std::vector<int> brute;
    for (std::size_t id = 0; id < fs.size(); ++id) {
      const auto& p = fs.patterns()[fs.instances()[id].pattern];
      if (context_values(p, ctx, sym) == inst_values[id]) brute.push_back(static_cast<int>(id));
    }
    const auto got = fs.active_set(ctx);
    CHECK(got == brute);
    std::vector<int> per_pattern(fs.patterns().size(), 0);
    for (int id : got) {
      CHECK(fs.is_active(id, ctx));
      ++per_pattern[fs.instances()[id].pattern];
    }
    for (int k : per_pattern) CHECK(k <= 1);
    if (trial % 4 == 0)
      for (int k : per_pattern) CHECK(k == 1);
  }
}

TEST_CASE("coarser patterns fire wherever the full trigram fires") {
  const Toy toy(150);
  const FeatureSet& fs = toy.model.features();
  for (std::size_t s = 0; s < 50; ++s)
    for (const auto& ctx : contexts(toy.coded[s])) {
      const auto act = fs.active_set(ctx);
      const bool full = std::any_of(act.begin(), act.end(), [&](int id) { return fs.instances()[id].pattern == 0; });
      if (full) CHECK(act.size() == fs.patterns().size());
    }
}

TEST_CASE("all-BOUNDARY history with an unseen future tag") {
  const Toy toy(100);
  const StateCode unseen{kUnknownId, kUnknownId, 6};
  const FeatureSet& fs = toy.model.features();
  for (int id : fs.active_set({kBoundary, kBoundary, unseen})) {
    const auto& p = fs.patterns()[fs.instances()[id].pattern];
    CHECK(p.mask[kFuture] == kAttrRel);
    CHECK((p.mask[kPrev1] != 0 || p.mask[kPrev2] != 0));
  }
}

TEST_CASE("contexts pad with two boundaries") {
  SymbolTable sym;
  const std::vector<StateCode> s = {sym.intern({"ART", Rel::Other, "NP"}), sym.intern({"NN", Rel::Same, "NP"})};
  const auto cs = contexts(s);
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].prev2 == kBoundary);
  CHECK(cs[0].prev1 == kBoundary);
  CHECK(cs[1].prev2 == kBoundary);
  CHECK(cs[1].prev1 == s[0]);
  CHECK(cs[1].future == s[1]);
}
