#include "stag/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <unordered_map>

namespace stag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::uint64_t kUnknownHistory = std::numeric_limits<std::uint64_t>::max();

bool rel_cat_less(const StructuralTag& a, const StructuralTag& b) {
  if (auto c = rel_symbol(a.rel) <=> rel_symbol(b.rel); c != 0) return c < 0;
  return a.cat < b.cat;
}

int future_position(const std::vector<StructuralTag>& futures, const StructuralTag& s) {
  auto it = std::lower_bound(futures.begin(), futures.end(), s);
  return it != futures.end() && *it == s ? static_cast<int>(it - futures.begin()) : -1;
}

struct Cand {
  StructuralTag tag;
  int y;  // future index, -1 for the fallback state
  std::uint64_t hid;
};

struct PairHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const noexcept {
    return std::hash<std::uint64_t>{}(p.first * 0x9E3779B97F4A7C15ull ^ p.second);
  }
};

class DistCache {
 public:
  explicit DistCache(const ProbSource& src) : src_(src) {}
  const std::vector<double>& get(std::uint64_t h2, std::uint64_t h1) {
    auto [it, fresh] = cache_.try_emplace({h2, h1});
    if (fresh) {
      it->second.resize(src_.futures().size());
      src_.log_distribution(h2, h1, it->second);
    }
    return it->second;
  }

 private:
  const ProbSource& src_;
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::vector<double>, PairHash> cache_;
};

}  // namespace

void MaxentSource::log_distribution(std::uint64_t h2, std::uint64_t h1, std::span<double> out) const {
  auto unpack = [](std::uint64_t p) {
    return StateCode{static_cast<std::uint16_t>(p >> 15), static_cast<std::uint16_t>((p >> 3) & 0xFFF),
                     static_cast<std::uint8_t>(p & 7)};
  };
  model_.log_distribution(unpack(h2), unpack(h1), out);
}

InterpolationSource::InterpolationSource(const NgramModel& model) : model_(model) {}

std::uint64_t InterpolationSource::history_id(const StructuralTag& s) const {
  const int id = model_.table.id(s);
  return id < 0 ? kUnknownHistory : static_cast<std::uint64_t>(id);
}

void InterpolationSource::log_distribution(std::uint64_t h2, std::uint64_t h1,
                                           std::span<double> out) const {
  auto id = [](std::uint64_t h) { return h == kUnknownHistory ? -1 : static_cast<int>(h); };
  std::vector<double> p;
  model_.distribution(id(h2), id(h1), p);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = p[k] > 0.0 ? std::log(p[k]) : kNegInf;
}

StateInventory::StateInventory(const std::vector<StructuralTag>& futures) : futures_(futures) {
  for (int y = 0; y < static_cast<int>(futures_.size()); ++y) groups_[futures_[y].tag].push_back(y);
  for (auto& [pos, ys] : groups_)
    std::stable_sort(ys.begin(), ys.end(),
                     [&](int a, int b) { return rel_cat_less(futures_[a], futures_[b]); });
}

const std::vector<int>& StateInventory::indices(const std::string& pos) const {
  static const std::vector<int> none;
  auto it = groups_.find(pos);
  return it == groups_.end() ? none : it->second;
}

std::vector<std::string> StateInventory::tags() const {
  std::vector<std::string> out;
  for (const auto& [t, _] : groups_) out.push_back(t);
  return out;
}

StructuralTag fallback_state(const std::string& pos) {
  return StructuralTag{pos, Rel::Other, std::string(kNoneCat)};
}

std::vector<StructuralTag> StateInventory::candidates(const std::string& pos) const {
  const auto& ys = indices(pos);
  if (ys.empty()) return {fallback_state(pos)};
  std::vector<StructuralTag> out;
  for (int y : ys) out.push_back(futures_[y]);
  return out;
}

ViterbiResult viterbi(const ProbSource& source, const StateInventory& inventory,
                      const std::vector<std::string>& pos, const DecodeOptions& options) {
  if (pos.empty()) throw std::invalid_argument("viterbi: empty input");
  const std::size_t n = pos.size();
  std::vector<std::vector<Cand>> cands(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ys = inventory.indices(pos[i]);
    if (ys.empty()) {
      auto s = fallback_state(pos[i]);
      cands[i].push_back({s, -1, source.history_id(s)});
    } else {
      for (int y : ys)
        cands[i].push_back({inventory.futures()[y], y, source.history_id(inventory.futures()[y])});
    }
  }

  DistCache cache(source);
  auto lp = [](const std::vector<double>* dist, const Cand& c) {
    return c.y < 0 ? 0.0 : (*dist)[c.y];
  };
  const std::uint64_t boundary = source.boundary_id();

  // delta[i][p * K_i + c]: best score of a prefix ending in (cands[i-1][p],
  // cands[i][c]); position 0 has a single boundary predecessor.
  std::vector<std::vector<double>> delta(n);
  std::vector<std::vector<char>> alive(n);
  std::vector<std::vector<int>> back(n);
  auto prev_count = [&](std::size_t i) { return i == 0 ? std::size_t{1} : cands[i - 1].size(); };

  auto prune = [&](std::size_t i) {
    const std::size_t total = delta[i].size();
    if (options.beam <= 0 || total <= static_cast<std::size_t>(options.beam)) return;
    std::vector<std::size_t> order;
    for (std::size_t s = 0; s < total; ++s)
      if (alive[i][s]) order.push_back(s);
    if (order.size() <= static_cast<std::size_t>(options.beam)) return;
    const std::size_t k = cands[i].size();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (delta[i][a] != delta[i][b]) return delta[i][a] > delta[i][b];
      if (a % k != b % k) return a % k < b % k;
      return a / k < b / k;
    });
    for (std::size_t r = options.beam; r < order.size(); ++r) alive[i][order[r]] = 0;
  };

  {
    const bool need = std::any_of(cands[0].begin(), cands[0].end(), [](const Cand& c) { return c.y >= 0; });
    const std::vector<double>* dist = need ? &cache.get(boundary, boundary) : nullptr;
    delta[0].resize(cands[0].size());
    alive[0].assign(cands[0].size(), 1);
    back[0].assign(cands[0].size(), -1);
    for (std::size_t c = 0; c < cands[0].size(); ++c) {
      double s = 0.0;
      s += lp(dist, cands[0][c]);
      delta[0][c] = s;
    }
    prune(0);
  }

  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t na = prev_count(i - 1), nb = cands[i - 1].size(), nc = cands[i].size();
    const bool need = std::any_of(cands[i].begin(), cands[i].end(), [](const Cand& c) { return c.y >= 0; });
    delta[i].assign(nb * nc, kNegInf);
    alive[i].assign(nb * nc, 0);
    back[i].assign(nb * nc, -1);
    for (std::size_t a = 0; a < na; ++a) {
      const std::uint64_t h2 = i == 1 ? boundary : cands[i - 2][a].hid;
      for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t from = a * nb + b;
        if (!alive[i - 1][from]) continue;
        const std::vector<double>* dist = need ? &cache.get(h2, cands[i - 1][b].hid) : nullptr;
        for (std::size_t c = 0; c < nc; ++c) {
          const double s = delta[i - 1][from] + lp(dist, cands[i][c]);
          const std::size_t to = b * nc + c;
          if (!alive[i][to] || s > delta[i][to]) {
            delta[i][to] = s;
            back[i][to] = static_cast<int>(a);
            alive[i][to] = 1;
          }
        }
      }
    }
    prune(i);
  }

  // best final pair: highest score, then smallest last state, then smallest
  // predecessor
  const std::size_t nb = prev_count(n - 1), nc = cands[n - 1].size();
  std::size_t best = 0;
  bool found = false;
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t s = b * nc + c;
      if (!alive[n - 1][s]) continue;
      if (!found || delta[n - 1][s] > delta[n - 1][best]) {
        best = s;
        found = true;
      }
    }

  ViterbiResult res;
  res.score = delta[n - 1][best];
  res.tags.resize(n);
  std::vector<std::size_t> chosen(n);
  std::size_t b = best / nc, c = best % nc;
  for (std::size_t i = n; i-- > 0;) {
    chosen[i] = c;
    if (i == 0) break;
    const int a = back[i][b * cands[i].size() + c];
    c = b;
    b = static_cast<std::size_t>(a);
  }
  for (std::size_t i = 0; i < n; ++i) {
    res.tags[i] = cands[i][chosen[i]].tag;
    res.candidate_counts.push_back(static_cast<int>(cands[i].size()));
  }
  return res;
}

double sequence_score(const ProbSource& source, const TagSequence& seq) {
  std::vector<double> dist(source.futures().size());
  std::uint64_t h2 = source.boundary_id(), h1 = source.boundary_id();
  double score = 0.0;
  for (const auto& s : seq) {
    const int y = future_position(source.futures(), s);
    if (y >= 0) {
      source.log_distribution(h2, h1, dist);
      score += dist[y];
    }
    h2 = h1;
    h1 = source.history_id(s);
  }
  return score;
}

ParseResult parse_span(const ProbSource& source, const StateInventory& inventory,
                       const std::vector<std::string>& pos,
                       const std::vector<std::optional<std::string>>& words,
                       const DecodeOptions& options) {
  if (!words.empty() && words.size() != pos.size())
    throw std::invalid_argument("parse_span: word and tag counts differ");
  ParseResult out;
  out.viterbi = viterbi(source, inventory, pos, options);
  out.decoded = decode_tags(out.viterbi.tags);
  for (std::size_t i = 0; i < words.size(); ++i) out.decoded.tree.leaves[i].word = words[i];
  return out;
}

std::vector<ViterbiResult> viterbi_batch(const ProbSource& source, const StateInventory& inventory,
                                         const std::vector<std::vector<std::string>>& inputs,
                                         const DecodeOptions& options) {
  std::vector<ViterbiResult> out(inputs.size());
  std::vector<std::exception_ptr> errors(inputs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(inputs.size()); ++i) {
    try {
      out[i] = viterbi(source, inventory, inputs[i], options);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace reference {

std::vector<ViterbiResult> viterbi_batch(const ProbSource& source, const StateInventory& inventory,
                                         const std::vector<std::vector<std::string>>& inputs,
                                         const DecodeOptions& options) {
  std::vector<ViterbiResult> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(viterbi(source, inventory, in, options));
  return out;
}

}  // namespace reference

}  // namespace stag
