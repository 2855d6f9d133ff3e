#include "stag/ngram.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "model_text.hpp"
#include "text_escape.hpp"

namespace stag {

namespace {

template <typename Map>
long lookup(const Map& m, std::uint64_t k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

NgramTable NgramTable::count(const std::vector<TagSequence>& corpus) {
  std::set<StructuralTag> seen;
  for (const auto& seq : corpus) {
    if (seq.empty()) throw std::invalid_argument("count_ngrams: empty sequence");
    seen.insert(seq.begin(), seq.end());
  }
  NgramTable t;
  t.states_.assign(seen.begin(), seen.end());
  if (t.states_.size() >= kMask) throw std::invalid_argument("count_ngrams: too many states");
  t.uni_.assign(t.states_.size() + 1, 0);
  for (const auto& seq : corpus) {
    int x = kBoundary, y = kBoundary;
    for (const auto& s : seq) {
      const int z = t.id(s);
      ++t.uni_[z];
      ++t.bi_[key2(y, z)];
      ++t.tri_[key3(x, y, z)];
      ++t.total_;
      x = y;
      y = z;
    }
  }
  t.rebuild_contexts();
  return t;
}

void NgramTable::rebuild_contexts() {
  ctx1_.clear();
  ctx2_.clear();
  for (const auto& [k, c] : bi_) ctx1_[k >> 20] += c;
  for (const auto& [k, c] : tri_) ctx2_[k >> 20] += c;
}

int NgramTable::id(const StructuralTag& s) const {
  auto it = std::lower_bound(states_.begin(), states_.end(), s);
  if (it == states_.end() || !(*it == s)) return -1;
  return static_cast<int>(it - states_.begin()) + 1;
}

long NgramTable::unigram(int z) const {
  return z > 0 && z < static_cast<int>(uni_.size()) ? uni_[z] : 0;
}
long NgramTable::bigram(int y, int z) const {
  return y < 0 || z < 0 ? 0 : lookup(bi_, key2(y, z));
}
long NgramTable::trigram(int x, int y, int z) const {
  return x < 0 || y < 0 || z < 0 ? 0 : lookup(tri_, key3(x, y, z));
}
long NgramTable::context1(int y) const { return y < 0 ? 0 : lookup(ctx1_, std::uint64_t(y)); }
long NgramTable::context2(int x, int y) const { return x < 0 || y < 0 ? 0 : lookup(ctx2_, key2(x, y)); }

NgramTable NgramTable::from_counts(std::vector<StructuralTag> states, std::vector<long> unigrams,
                                   const std::vector<std::array<long, 3>>& bigrams,
                                   const std::vector<std::array<long, 4>>& trigrams) {
  NgramTable t;
  t.states_ = std::move(states);
  if (!std::is_sorted(t.states_.begin(), t.states_.end()) ||
      std::adjacent_find(t.states_.begin(), t.states_.end()) != t.states_.end())
    throw std::invalid_argument("state list is not sorted and unique");
  if (unigrams.size() != t.states_.size()) throw std::invalid_argument("unigram count mismatch");
  t.uni_.assign(1, 0);
  t.uni_.insert(t.uni_.end(), unigrams.begin(), unigrams.end());
  const long n = static_cast<long>(t.states_.size());
  auto check = [n](long id, bool boundary_ok) {
    if (id > n || id < (boundary_ok ? 0 : 1)) throw std::invalid_argument("state id out of range");
  };
  for (long u : unigrams) t.total_ += u;
  for (const auto& [y, z, c] : bigrams) {
    check(y, true);
    check(z, false);
    t.bi_[key2(static_cast<int>(y), static_cast<int>(z))] = c;
  }
  for (const auto& [x, y, z, c] : trigrams) {
    check(x, true);
    check(y, true);
    check(z, false);
    t.tri_[key3(static_cast<int>(x), static_cast<int>(y), static_cast<int>(z))] = c;
  }
  t.rebuild_contexts();
  return t;
}

std::vector<std::array<long, 3>> NgramTable::bigram_list() const {
  std::vector<std::array<long, 3>> out;
  for (const auto& [k, c] : bi_) out.push_back({long(k >> 20), long(k & kMask), c});
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::array<long, 4>> NgramTable::trigram_list() const {
  std::vector<std::array<long, 4>> out;
  for (const auto& [k, c] : tri_) out.push_back({long(k >> 40), long((k >> 20) & kMask), long(k & kMask), c});
  std::sort(out.begin(), out.end());
  return out;
}

InterpolationWeights deleted_interpolation(const NgramTable& t) {
  if (t.total() == 0 || t.trigram_types() == 0)
    throw std::invalid_argument("deleted_interpolation: empty table");
  auto ratio = [](long num, long den) { return den == 0 ? 0.0 : double(num) / double(den); };
  long mass[3] = {0, 0, 0};
  t.for_each_trigram([&](int x, int y, int z, long c) {
    const double e3 = ratio(c - 1, t.context2(x, y) - 1);
    const double e2 = ratio(t.bigram(y, z) - 1, t.context1(y) - 1);
    const double e1 = ratio(t.unigram(z) - 1, t.total() - 1);
    // ties go to the lower order
    if (e1 >= e2 && e1 >= e3) mass[0] += c;
    else if (e2 >= e3) mass[1] += c;
    else mass[2] += c;
  });
  const double sum = double(mass[0] + mass[1] + mass[2]);
  InterpolationWeights w{mass[0] / sum, mass[1] / sum, mass[2] / sum};
  return w;
}

double interpolated_prob(const NgramTable& t, const InterpolationWeights& w, int x, int y, int z) {
  if (z <= 0) return 0.0;
  double p = w.l1 * double(t.unigram(z)) / double(t.total());
  if (const long c1 = t.context1(y); c1 > 0) p += w.l2 * double(t.bigram(y, z)) / double(c1);
  if (const long c2 = t.context2(x, y); c2 > 0) p += w.l3 * double(t.trigram(x, y, z)) / double(c2);
  return p;
}

void NgramModel::distribution(int x, int y, std::vector<double>& out) const {
  const std::size_t n = table.state_count();
  out.assign(n, 0.0);
  const long c1 = table.context1(y);
  const long c2 = table.context2(x, y);
  double norm = weights.l1 + (c1 > 0 ? weights.l2 : 0.0) + (c2 > 0 ? weights.l3 : 0.0);
  InterpolationWeights w = weights;
  if (norm <= 0.0) {
    w = {1.0, 0.0, 0.0};
    norm = 1.0;
  }
  for (std::size_t k = 0; k < n; ++k)
    out[k] = interpolated_prob(table, w, x, y, static_cast<int>(k) + 1) / norm;
}

NgramModel train_ngram(const std::vector<TagSequence>& corpus) {
  NgramModel m;
  m.table = NgramTable::count(corpus);
  m.weights = deleted_interpolation(m.table);
  return m;
}

// --- model file -------------------------------------------------------------

void save_ngram(const NgramModel& model, std::ostream& out) {
  const NgramTable& t = model.table;
  std::ostringstream body;
  body << kNgramMagic << ' ' << kNgramVersion << '\n';
  body << "lambda " << detail::format_double(model.weights.l1) << ' '
       << detail::format_double(model.weights.l2) << ' ' << detail::format_double(model.weights.l3)
       << '\n';
  body << "states " << t.state_count() << '\n';
  for (std::size_t k = 0; k < t.state_count(); ++k) {
    const auto& s = t.states()[k];
    body << escape_field(s.tag) << '\t' << rel_symbol(s.rel) << '\t' << escape_field(s.cat) << '\t'
         << t.unigram(static_cast<int>(k) + 1) << '\n';
  }
  const auto bi = t.bigram_list();
  body << "bigrams " << bi.size() << '\n';
  for (const auto& [y, z, c] : bi) body << y << ' ' << z << ' ' << c << '\n';
  const auto tri = t.trigram_list();
  body << "trigrams " << tri.size() << '\n';
  for (const auto& [x, y, z, c] : tri) body << x << ' ' << y << ' ' << z << ' ' << c << '\n';
  out << detail::with_checksum(body.str());
}

void save_ngram(const NgramModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_ngram(model, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

NgramModel load_ngram(std::istream& in) {
  const std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string err;
  const std::string body = detail::checked_body(all, err);
  if (!err.empty()) throw NgramModelError("baseline model file: " + err);
  std::istringstream r(body);
  auto fail = [](const std::string& what) -> NgramModelError {
    return NgramModelError("baseline model file: " + what);
  };
  std::string word;
  int version = 0;
  if (!(r >> word >> version) || word != kNgramMagic) throw fail("not a baseline model");
  if (version != kNgramVersion) throw fail("unsupported version " + std::to_string(version));
  NgramModel m;
  std::string l1, l2, l3;
  if (!(r >> word >> l1 >> l2 >> l3) || word != "lambda" ||
      !detail::parse_double(l1, m.weights.l1) || !detail::parse_double(l2, m.weights.l2) ||
      !detail::parse_double(l3, m.weights.l3))
    throw fail("bad lambda line");
  std::size_t n = 0;
  if (!(r >> word >> n) || word != "states") throw fail("missing states");
  r.ignore(1);
  std::vector<StructuralTag> states;
  std::vector<long> uni;
  for (std::size_t k = 0; k < n; ++k) {
    std::string line;
    if (!std::getline(r, line)) throw fail("short state list");
    const auto f = detail::split_tabs(line);
    if (f.size() != 4) throw fail("bad state line");
    auto rel = parse_rel(f[1]);
    if (!rel) throw fail("bad REL '" + f[1] + "'");
    states.push_back({unescape_field(f[0]), *rel, unescape_field(f[2])});
    try {
      uni.push_back(std::stol(f[3]));
    } catch (const std::exception&) {
      throw fail("bad unigram count");
    }
  }
  std::vector<std::array<long, 3>> bi;
  if (!(r >> word >> n) || word != "bigrams") throw fail("missing bigrams");
  bi.resize(n);
  for (auto& b : bi)
    if (!(r >> b[0] >> b[1] >> b[2])) throw fail("short bigram list");
  std::vector<std::array<long, 4>> tri;
  if (!(r >> word >> n) || word != "trigrams") throw fail("missing trigrams");
  tri.resize(n);
  for (auto& t : tri)
    if (!(r >> t[0] >> t[1] >> t[2] >> t[3])) throw fail("short trigram list");
  try {
    m.table = NgramTable::from_counts(std::move(states), std::move(uni), bi, tri);
  } catch (const std::invalid_argument& e) {
    throw fail(e.what());
  }
  return m;
}

NgramModel load_ngram(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open baseline model " + path.string());
  return load_ngram(in);
}

}  // namespace stag
