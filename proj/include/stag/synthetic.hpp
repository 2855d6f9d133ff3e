#pragma once

#include <cstdint>

#include "stag/corpus_io.hpp"

namespace stag {

// A small hand-written German-flavoured phrase grammar over STTS tags: NPs
// with determiners, adjectives, genitive and PP postmodifiers, PPs, and
// predicative APs, separated by verbs and punctuation outside any chunk.
// PP and genitive attachment is ambiguous on the POS level. Every generated
// tree is depth-bounded and survives the tag round-trip.
struct SyntheticOptions {
  double pp_attach = 0.2;          // NP takes a PP postmodifier
  double genitive = 0.12;          // NP takes a genitive NP postmodifier
  double adjective_phrase = 0.25;  // prenominal adjective is an AP(ADV ADJA)
};

Corpus synthetic_corpus(std::size_t sentences, std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace stag
