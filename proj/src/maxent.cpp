#include "stag/maxent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "model_text.hpp"
#include "text_escape.hpp"

namespace stag {

MaxentModel::MaxentModel(std::vector<StructuralTag> futures, std::vector<FeaturePattern> patterns)
    : futures_(std::move(futures)) {
  std::sort(futures_.begin(), futures_.end());
  futures_.erase(std::unique(futures_.begin(), futures_.end()), futures_.end());
  for (const auto& y : futures_) {
    const StateCode c = symbols_.intern(y);
    future_ids_.emplace(c.packed(), static_cast<int>(future_codes_.size()));
    future_codes_.push_back(c);
  }
  features_ = FeatureSet(std::move(patterns), {});
  build_index();
}

int MaxentModel::future_index(StateCode c) const {
  auto it = future_ids_.find(c.packed());
  return it == future_ids_.end() ? -1 : it->second;
}

void MaxentModel::set_features(FeatureSet features, std::vector<double> weights) {
  if (weights.empty()) weights.assign(features.size(), 0.0);
  if (weights.size() != features.size())
    throw std::invalid_argument("weight count does not match feature count");
  features_ = std::move(features);
  weights_ = std::move(weights);
  build_index();
}

void MaxentModel::set_weights(std::vector<double> w) {
  if (w.size() != features_.size())
    throw std::invalid_argument("weight count does not match feature count");
  weights_ = std::move(w);
}

void MaxentModel::build_index() {
  const auto& pats = features_.patterns();
  const auto& inst = features_.instances();
  index_.assign(pats.size(), {});
  std::vector<std::vector<int>> by_pattern(pats.size());
  for (int id = 0; id < static_cast<int>(inst.size()); ++id) by_pattern[inst[id].pattern].push_back(id);

  for (std::size_t p = 0; p < pats.size(); ++p) {
    PatternIndex& px = index_[p];
    std::map<std::uint32_t, int> class_of;
    px.future_class.resize(futures_.size());
    for (std::size_t y = 0; y < futures_.size(); ++y) {
      const auto key = future_key(pats[p], future_codes_[y]);
      auto [it, fresh] = class_of.emplace(key, static_cast<int>(class_of.size()));
      px.future_class[y] = it->second;
    }
    const int classes = static_cast<int>(class_of.size());
    px.class_offset.assign(classes + 1, 0);
    for (int c : px.future_class) ++px.class_offset[c + 1];
    for (int c = 0; c < classes; ++c) px.class_offset[c + 1] += px.class_offset[c];
    px.class_members.resize(futures_.size());
    std::vector<int> fill(px.class_offset.begin(), px.class_offset.end() - 1);
    for (std::size_t y = 0; y < futures_.size(); ++y)
      px.class_members[fill[px.future_class[y]]++] = static_cast<int>(y);

    std::vector<std::pair<std::uint64_t, std::pair<int, int>>> rows;
    for (int id : by_pattern[p]) {
      auto it = class_of.find(inst[id].fkey);
      if (it == class_of.end())
        throw ModelError("feature " + std::to_string(id) + " constrains a future outside the inventory");
      rows.push_back({inst[id].hkey, {it->second, id}});
    }
    std::sort(rows.begin(), rows.end());
    for (std::size_t i = 0; i < rows.size();) {
      std::size_t j = i;
      while (j < rows.size() && rows[j].first == rows[i].first) ++j;
      const int begin = static_cast<int>(px.entries.size());
      for (std::size_t k = i; k < j; ++k) px.entries.push_back(rows[k].second);
      px.by_history.emplace(rows[i].first, std::pair<int, int>{begin, static_cast<int>(px.entries.size())});
      i = j;
    }
  }
}

void MaxentModel::log_distribution(StateCode prev2, StateCode prev1, std::span<double> out) const {
  if (out.size() != futures_.size()) throw std::invalid_argument("log_distribution: bad output size");
  std::fill(out.begin(), out.end(), 0.0);
  for_each_active(prev2, prev1, [&](int y, int fid) { out[y] += weights_[fid]; });
  double mx = -INFINITY;
  for (double s : out) mx = std::max(mx, s);
  double z = 0.0;
  for (double s : out) z += std::exp(s - mx);
  const double log_z = mx + std::log(z);
  for (double& s : out) s -= log_z;
}

std::vector<double> MaxentModel::log_distribution(StateCode prev2, StateCode prev1) const {
  std::vector<double> out(futures_.size());
  log_distribution(prev2, prev1, out);
  return out;
}

double MaxentModel::conditional_prob(StateCode prev2, StateCode prev1, StateCode future) const {
  const int y = future_index(future);
  if (y < 0) throw std::out_of_range("future " + symbols_.tag_name(future.tag) + " is not in the inventory");
  return std::exp(log_distribution(prev2, prev1)[y]);
}

std::vector<StructuralTag> future_inventory(const std::vector<TagSequence>& corpus) {
  std::set<StructuralTag> ys;
  for (const auto& seq : corpus) ys.insert(seq.begin(), seq.end());
  return {ys.begin(), ys.end()};
}

std::vector<std::vector<StateCode>> encode_corpus(const std::vector<TagSequence>& corpus,
                                                  const SymbolTable& symbols) {
  std::vector<std::vector<StateCode>> out;
  out.reserve(corpus.size());
  for (const auto& seq : corpus) {
    std::vector<StateCode> codes;
    codes.reserve(seq.size());
    for (const auto& s : seq) codes.push_back(symbols.code(s));
    out.push_back(std::move(codes));
  }
  return out;
}

MaxentModel make_model(const std::vector<TagSequence>& corpus,
                       const std::vector<FeaturePattern>& patterns, int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("feature cutoff must be at least 1");
  MaxentModel model(future_inventory(corpus), patterns);
  model.set_features(extract_features(encode_corpus(corpus, model.symbols()), patterns, cutoff));
  model.info.cutoff = cutoff;
  return model;
}

EventSpace build_events(const std::vector<TagSequence>& corpus, const MaxentModel& model) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> slot;
  std::vector<std::map<int, long>> futures;
  EventSpace ev;
  for (const auto& codes : encode_corpus(corpus, model.symbols())) {
    for (const auto& ctx : contexts(codes)) {
      const int y = model.future_index(ctx.future);
      if (y < 0) throw std::invalid_argument("event future is not in the model inventory");
      auto [it, fresh] = slot.emplace(std::pair{ctx.prev2.packed(), ctx.prev1.packed()}, ev.histories.size());
      if (fresh) {
        ev.histories.push_back(EventSpace::History{ctx.prev2, ctx.prev1, 0, {}});
        futures.emplace_back();
      }
      ++ev.histories[it->second].count;
      ++futures[it->second][y];
      ++ev.total;
    }
  }
  for (std::size_t h = 0; h < ev.histories.size(); ++h)
    ev.histories[h].futures.assign(futures[h].begin(), futures[h].end());
  return ev;
}

double log_likelihood(const MaxentModel& model, const EventSpace& events) {
  if (events.total == 0) return 0.0;
  std::vector<double> dist(model.future_count());
  double ll = 0.0;
  for (const auto& h : events.histories) {
    model.log_distribution(h.prev2, h.prev1, dist);
    for (const auto& [y, c] : h.futures) ll += static_cast<double>(c) * dist[y];
  }
  return ll / static_cast<double>(events.total);
}

std::vector<double> empirical_expectations(const MaxentModel& model, const EventSpace& events) {
  std::vector<double> e(model.features().size(), 0.0);
  if (events.total == 0) return e;
  const auto& fs = model.features();
  const double n = static_cast<double>(events.total);
  for (const auto& h : events.histories)
    for (const auto& [y, c] : h.futures)
      for (int id : fs.active_set(ContextTriple{h.prev2, h.prev1, model.future_codes()[y]}))
        e[id] += static_cast<double>(c) / n;
  return e;
}

double solve_iis_update(std::span<const std::pair<int, double>> a, double target, double lambda,
                        double sigma2, double max_delta, bool* clamped) {
  const double inv_s2 = sigma2 > 0.0 ? 1.0 / sigma2 : 0.0;
  auto g = [&](double d, double* deriv) {
    double v = (lambda + d) * inv_s2 - target;
    double dv = inv_s2;
    for (const auto& [m, mass] : a) {
      const double e = mass * std::exp(std::min(d * m, 700.0));
      v += e;
      dv += e * m;
    }
    if (deriv) *deriv = dv;
    return v;
  };
  if (clamped) *clamped = false;
  double lo = -max_delta, hi = max_delta;
  if (g(hi, nullptr) <= 0.0) {
    if (clamped) *clamped = true;
    return hi;
  }
  if (g(lo, nullptr) >= 0.0) {
    if (clamped) *clamped = true;
    return lo;
  }
  // g is increasing; safeguarded Newton inside the bracket.
  double d = std::clamp(0.0, lo, hi);
  for (int it = 0; it < 200; ++it) {
    double dv = 0.0;
    const double v = g(d, &dv);
    if (v == 0.0) return d;
    if (v > 0.0) hi = d;
    else lo = d;
    double next = dv > 0.0 ? d - v / dv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - d) <= 1e-15 * (1.0 + std::abs(d)) || hi - lo <= 1e-15 * (1.0 + std::abs(d)))
      return next;
    d = next;
  }
  return d;
}

// --- model file -------------------------------------------------------------

namespace {

using detail::format_double;
using detail::split_tabs;

double parse_double(const std::string& s) {
  double v = 0.0;
  if (!detail::parse_double(s, v)) throw ModelError("bad number '" + s + "' in model file");
  return v;
}

class LineReader {
 public:
  explicit LineReader(const std::string& body) : in_(body) {}
  std::string line() {
    std::string l;
    if (!std::getline(in_, l)) throw ModelError("model file ends early");
    return l;
  }
  // "key value..." line; returns the rest after the key.
  std::string keyed(const std::string& key) {
    const std::string l = line();
    if (l.rfind(key + ' ', 0) != 0 && l != key)
      throw ModelError("expected '" + key + "' in model file, found '" + l.substr(0, 40) + "'");
    return l.size() > key.size() ? l.substr(key.size() + 1) : std::string();
  }
  long count(const std::string& key) {
    const std::string v = keyed(key);
    try {
      return std::stol(v);
    } catch (const std::exception&) {
      throw ModelError("bad count for '" + key + "'");
    }
  }

 private:
  std::istringstream in_;
};

}  // namespace

void save_model(const MaxentModel& model, std::ostream& out) {
  std::ostringstream body;
  body << kMaxentMagic << ' ' << kMaxentVersion << '\n';
  body << "futures " << model.future_count() << '\n';
  for (const auto& y : model.futures())
    body << escape_field(y.tag) << '\t' << rel_symbol(y.rel) << '\t' << escape_field(y.cat) << '\n';
  body << "patterns " << model.patterns().size() << '\n';
  for (const auto& p : model.patterns()) body << pattern_to_string(p) << '\n';
  const TrainingInfo& info = model.info;
  body << "cutoff " << info.cutoff << '\n';
  body << "iterations " << info.iterations << '\n';
  body << "converged " << (info.converged ? 1 : 0) << '\n';
  body << "loglik " << info.loglik.size();
  for (double v : info.loglik) body << ' ' << format_double(v);
  body << '\n';
  const auto& fs = model.features();
  body << "features " << fs.size() << '\n';
  for (std::size_t id = 0; id < fs.size(); ++id) {
    const auto& f = fs.instances()[id];
    body << (f.pattern + 1);
    for (const auto& v : instance_values(fs.patterns()[f.pattern], f, model.symbols()))
      body << '\t' << escape_field(v);
    body << '\t' << format_double(model.weights()[id]) << '\n';
  }
  out << detail::with_checksum(body.str());
}

void save_model(const MaxentModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_model(model, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

MaxentModel load_model(std::istream& in) {
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string err;
  const std::string body = detail::checked_body(all, err);
  if (!err.empty()) throw ModelError("model file: " + err);

  LineReader r(body);
  {
    std::istringstream head(r.line());
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kMaxentMagic) throw ModelError("not a maxent model file");
    if (version != kMaxentVersion)
      throw ModelError("unsupported maxent model version " + std::to_string(version));
  }
  const long ny = r.count("futures");
  std::vector<StructuralTag> ys;
  for (long i = 0; i < ny; ++i) {
    const auto f = split_tabs(r.line());
    if (f.size() != 3) throw ModelError("bad future line");
    auto rel = parse_rel(f[1]);
    if (!rel) throw ModelError("bad REL '" + f[1] + "' in future inventory");
    ys.push_back(StructuralTag{unescape_field(f[0]), *rel, unescape_field(f[2])});
  }
  const long np = r.count("patterns");
  std::vector<FeaturePattern> patterns;
  for (long i = 0; i < np; ++i) patterns.push_back(parse_pattern(r.line(), static_cast<int>(i) + 1));
  MaxentModel model(ys, patterns);
  if (model.futures() != ys) throw ModelError("future inventory is not sorted");
  TrainingInfo info;
  info.cutoff = static_cast<int>(r.count("cutoff"));
  info.iterations = static_cast<int>(r.count("iterations"));
  info.converged = r.count("converged") != 0;
  {
    std::istringstream ll(r.keyed("loglik"));
    std::size_t n = 0;
    ll >> n;
    std::string v;
    for (std::size_t i = 0; i < n && ll >> v; ++i) info.loglik.push_back(parse_double(v));
    if (info.loglik.size() != n) throw ModelError("short loglik trace");
  }
  const long nf = r.count("features");
  std::vector<FeatureInstance> inst;
  std::vector<double> weights;
  inst.reserve(nf);
  weights.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    auto f = split_tabs(r.line());
    if (f.size() < 2) throw ModelError("bad feature line");
    int pid = 0;
    try {
      pid = std::stoi(f.front());
    } catch (const std::exception&) {
      throw ModelError("bad pattern id in feature line");
    }
    weights.push_back(parse_double(f.back()));
    std::vector<std::string> values;
    for (std::size_t k = 1; k + 1 < f.size(); ++k) values.push_back(unescape_field(f[k]));
    try {
      inst.push_back(instance_from_values(patterns, pid - 1, values, model.symbols()));
    } catch (const std::invalid_argument& e) {
      throw ModelError(std::string("feature ") + std::to_string(i + 1) + ": " + e.what());
    }
  }
  model.set_features(FeatureSet(patterns, std::move(inst)), std::move(weights));
  model.info = std::move(info);
  return model;
}

MaxentModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model " + path.string());
  return load_model(in);
}

}  // namespace stag
