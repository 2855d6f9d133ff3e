#include "stag/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace stag {

long percent_tenths(long num, long den) {
  if (den <= 0) return 1000;
  // round(1000 num / den), halves up
  return (2000 * num + den) / (2 * den);
}

std::string format_percent(long num, long den) {
  const long t = percent_tenths(num, den);
  return std::to_string(t / 10) + "." + std::to_string(t % 10);
}

namespace {

std::string format_ratio(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", std::floor(r * 1000.0 + 0.5) / 10.0);
  return buf;
}

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": gold and prediction counts differ");
}

template <typename Key>
long multiset_matches(const std::vector<Key>& gold, const std::vector<Key>& pred) {
  std::map<Key, long> pool;
  for (const auto& k : gold) ++pool[k];
  long hits = 0;
  for (const auto& k : pred) {
    auto it = pool.find(k);
    if (it != pool.end() && it->second > 0) {
      --it->second;
      ++hits;
    }
  }
  return hits;
}

std::vector<std::tuple<int, int, std::string>> labelled_spans(const ChunkTree& t, bool labelled) {
  const auto spans = node_spans(t);
  std::vector<std::tuple<int, int, std::string>> out;
  for (std::size_t n = 0; n < spans.size(); ++n)
    out.emplace_back(spans[n].first, spans[n].second, labelled ? t.nodes[n].cat : std::string());
  return out;
}

}  // namespace

Measure tags_accuracy(const std::vector<TagSequence>& gold, const std::vector<TagSequence>& pred) {
  check_aligned(gold.size(), pred.size(), "tags_accuracy");
  Measure m;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    check_aligned(gold[s].size(), pred[s].size(), "tags_accuracy");
    for (std::size_t i = 0; i < gold[s].size(); ++i) m.correct += gold[s][i].rel == pred[s][i].rel;
    m.gold += static_cast<long>(gold[s].size());
  }
  m.predicted = m.gold;
  return m;
}

Measure bracketing(const std::vector<ChunkTree>& gold, const std::vector<ChunkTree>& pred, bool labelled) {
  check_aligned(gold.size(), pred.size(), "bracketing");
  Measure m;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    check_aligned(gold[s].size(), pred[s].size(), "bracketing");
    const auto g = labelled_spans(gold[s], labelled);
    const auto p = labelled_spans(pred[s], labelled);
    m.gold += static_cast<long>(g.size());
    m.predicted += static_cast<long>(p.size());
    m.correct += multiset_matches(g, p);
  }
  return m;
}

std::string unlabelled_structure(const ChunkTree& tree, const ChildRef& item) {
  if (item.is_leaf()) return std::to_string(item.index);
  std::string out = "(";
  const auto& children = tree.nodes.at(item.index).children;
  for (std::size_t k = 0; k < children.size(); ++k) {
    if (k) out += ' ';
    out += unlabelled_structure(tree, children[k]);
  }
  return out + ")";
}

namespace {

std::vector<std::string> top_structures(const ChunkTree& t) {
  std::vector<std::string> out;
  for (const auto& item : t.top)
    if (!item.is_leaf()) out.push_back(unlabelled_structure(t, item));
  return out;
}

std::vector<std::pair<int, int>> top_spans(const ChunkTree& t) {
  const auto spans = node_spans(t);
  std::vector<std::pair<int, int>> out;
  for (const auto& item : t.top)
    if (!item.is_leaf()) out.push_back(spans.at(item.index));
  return out;
}

}  // namespace

Measure structural_match(const std::vector<ChunkTree>& gold, const std::vector<ChunkTree>& pred) {
  check_aligned(gold.size(), pred.size(), "structural_match");
  Measure m;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto g = top_structures(gold[s]);
    const auto p = top_structures(pred[s]);
    m.gold += static_cast<long>(g.size());
    m.predicted += static_cast<long>(p.size());
    m.correct += multiset_matches(g, p);
  }
  return m;
}

Measure external_bounds(const std::vector<ChunkTree>& gold, const std::vector<ChunkTree>& pred) {
  check_aligned(gold.size(), pred.size(), "external_bounds");
  Measure m;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto g = top_spans(gold[s]);
    const auto p = top_spans(pred[s]);
    m.gold += static_cast<long>(g.size());
    m.predicted += static_cast<long>(p.size());
    m.correct += multiset_matches(g, p);
  }
  return m;
}

std::string_view mode_name(Mode m) { return m == Mode::Treebank ? "treebank" : "chunking"; }

Mode parse_mode(const std::string& s) {
  if (s == "treebank") return Mode::Treebank;
  if (s == "chunking") return Mode::Chunking;
  throw std::invalid_argument("unknown mode '" + s + "' (expected treebank or chunking)");
}

EvalReport evaluate(const std::vector<ChunkTree>& gold, const std::vector<ChunkTree>& pred, Mode mode,
                    const std::vector<TagSequence>* pred_tags) {
  check_aligned(gold.size(), pred.size(), "evaluate");
  EvalReport r;
  r.mode = mode;
  r.items = static_cast<long>(gold.size());
  std::vector<TagSequence> g, p;
  for (const auto& t : gold) g.push_back(encode_tree(t));
  if (pred_tags) {
    p = *pred_tags;
  } else {
    for (const auto& t : pred) p.push_back(encode_tree(t));
  }
  r.tags = tags_accuracy(g, p);
  r.bracketing = bracketing(gold, pred, false);
  r.labelled = bracketing(gold, pred, true);
  r.structural = structural_match(gold, pred);
  r.external = external_bounds(gold, pred);
  return r;
}

MeanReport average(const std::vector<EvalReport>& reports) {
  MeanReport m;
  m.runs = static_cast<int>(reports.size());
  if (reports.empty()) return m;
  auto add = [](MeanReport::Pair& p, const Measure& x) {
    p.recall += x.recall();
    p.precision += x.precision();
  };
  for (const auto& r : reports) {
    m.tags += r.tags.recall();
    add(m.bracketing, r.bracketing);
    add(m.labelled, r.labelled);
    add(m.structural, r.structural);
    add(m.external, r.external);
  }
  const double n = double(reports.size());
  m.tags /= n;
  for (auto* p : {&m.bracketing, &m.labelled, &m.structural, &m.external}) {
    p->recall /= n;
    p->precision /= n;
  }
  return m;
}

namespace {

struct Row {
  const char* name;
  const Measure* m;
};

}  // namespace

void print_table(std::ostream& out, const EvalReport& r) {
  char line[128];
  std::snprintf(line, sizeof line, "%-15s %10s %10s %8s %8s\n", "measure", "total", "correct", "recall",
                "prec.");
  out << "# mode " << mode_name(r.mode) << ", " << r.items << (r.mode == Mode::Treebank ? " chunks" : " sentences")
      << '\n'
      << line;
  std::snprintf(line, sizeof line, "%-15s %10ld %10ld %8s\n", "tags", r.tags.gold, r.tags.correct,
                (format_percent(r.tags.correct, r.tags.gold) + "%").c_str());
  out << line;
  const Row rows[] = {{"bracketing", &r.bracketing},
                      {"lab. brack.", &r.labelled},
                      {"struct. match", &r.structural},
                      {"ext. bounds", &r.external}};
  for (const auto& row : rows) {
    std::snprintf(line, sizeof line, "%-15s %10ld %10ld %8s %8s\n", row.name, row.m->gold, row.m->correct,
                  (format_percent(row.m->correct, row.m->gold) + "%").c_str(),
                  (format_percent(row.m->correct, row.m->predicted) + "%").c_str());
    out << line;
  }
}

void print_table(std::ostream& out, const MeanReport& r) {
  char line[128];
  out << "# mean over " << r.runs << " runs\n";
  std::snprintf(line, sizeof line, "%-15s %8s %8s\n", "measure", "recall", "prec.");
  out << line;
  std::snprintf(line, sizeof line, "%-15s %8s\n", "tags", (format_ratio(r.tags) + "%").c_str());
  out << line;
  const std::pair<const char*, const MeanReport::Pair*> rows[] = {{"bracketing", &r.bracketing},
                                                                  {"lab. brack.", &r.labelled},
                                                                  {"struct. match", &r.structural},
                                                                  {"ext. bounds", &r.external}};
  for (const auto& [name, p] : rows) {
    std::snprintf(line, sizeof line, "%-15s %8s %8s\n", name, (format_ratio(p->recall) + "%").c_str(),
                  (format_ratio(p->precision) + "%").c_str());
    out << line;
  }
}

void print_keyvalues(std::ostream& out, const EvalReport& r, const std::string& prefix) {
  out << prefix << "mode=" << mode_name(r.mode) << '\n' << prefix << "items=" << r.items << '\n';
  out << prefix << "tags.total=" << r.tags.gold << '\n'
      << prefix << "tags.correct=" << r.tags.correct << '\n'
      << prefix << "tags.accuracy=" << format_percent(r.tags.correct, r.tags.gold) << '\n';
  const std::pair<const char*, const Measure*> rows[] = {{"bracketing", &r.bracketing},
                                                         {"labelled", &r.labelled},
                                                         {"structural", &r.structural},
                                                         {"external", &r.external}};
  for (const auto& [name, m] : rows) {
    out << prefix << name << ".gold=" << m->gold << '\n'
        << prefix << name << ".predicted=" << m->predicted << '\n'
        << prefix << name << ".correct=" << m->correct << '\n'
        << prefix << name << ".recall=" << format_percent(m->correct, m->gold) << '\n'
        << prefix << name << ".precision=" << format_percent(m->correct, m->predicted) << '\n';
  }
}

void print_keyvalues(std::ostream& out, const MeanReport& r, const std::string& prefix) {
  out << prefix << "runs=" << r.runs << '\n' << prefix << "tags.accuracy=" << format_ratio(r.tags) << '\n';
  const std::pair<const char*, const MeanReport::Pair*> rows[] = {{"bracketing", &r.bracketing},
                                                                  {"labelled", &r.labelled},
                                                                  {"structural", &r.structural},
                                                                  {"external", &r.external}};
  for (const auto& [name, p] : rows)
    out << prefix << name << ".recall=" << format_ratio(p->recall) << '\n'
        << prefix << name << ".precision=" << format_ratio(p->precision) << '\n';
}

}  // namespace stag
