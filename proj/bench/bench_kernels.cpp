// Parallel kernels against their serial references on the synthetic treebank.
#include <benchmark/benchmark.h>

#include "stag/pipeline.hpp"
#include "stag/synthetic.hpp"

using namespace stag;

namespace {

struct Fixture {
  std::vector<TagSequence> train;
  std::vector<std::vector<std::string>> test_pos;
  MaxentModel model;
  EventSpace events;

  explicit Fixture(std::size_t n) {
    const Corpus c = chunk_sentences(synthetic_corpus(n + 100, 7), default_chunk_categories());
    for (std::size_t i = 0; i < n; ++i) train.push_back(encode_tree(c.sentences[i]));
    for (std::size_t i = n; i < c.sentences.size(); ++i) test_pos.push_back(c.sentences[i].pos());
    model = make_model(train, default_patterns(), 1);
    events = build_events(train, model);
  }
};

const Fixture& fixture() {
  static const Fixture f(400);
  return f;
}

void BM_iis_parallel(benchmark::State& state) {
  const Fixture& f = fixture();
  IisOptions opt;
  opt.max_iterations = 1;
  for (auto _ : state) {
    MaxentModel m = f.model;
    benchmark::DoNotOptimize(train_iis(m, f.events, opt));
  }
}

void BM_iis_reference(benchmark::State& state) {
  const Fixture& f = fixture();
  IisOptions opt;
  opt.max_iterations = 1;
  for (auto _ : state) {
    MaxentModel m = f.model;
    benchmark::DoNotOptimize(reference::train_iis(m, f.events, opt));
  }
}

void BM_expected_counts(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(expected_counts(f.model, f.events));
}

void BM_decode_batch_parallel(benchmark::State& state) {
  const Fixture& f = fixture();
  const MaxentSource src(f.model);
  const StateInventory inv(f.model.futures());
  for (auto _ : state) benchmark::DoNotOptimize(viterbi_batch(src, inv, f.test_pos));
}

void BM_decode_batch_serial(benchmark::State& state) {
  const Fixture& f = fixture();
  const MaxentSource src(f.model);
  const StateInventory inv(f.model.futures());
  for (auto _ : state) benchmark::DoNotOptimize(reference::viterbi_batch(src, inv, f.test_pos));
}

}  // namespace

BENCHMARK(BM_iis_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_iis_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_expected_counts)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_decode_batch_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_decode_batch_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
