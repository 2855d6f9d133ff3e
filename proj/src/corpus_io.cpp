#include "stag/corpus_io.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "text_escape.hpp"

#ifndef STAG_DEFAULT_DATA_DIR
#define STAG_DEFAULT_DATA_DIR "data"
#endif

namespace stag {

ParseError::ParseError(std::string file, int line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what),
      file_(std::move(file)),
      line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

// --- bracketed format -------------------------------------------------------

struct Token {
  enum class Kind { Open, Close, Atom } kind;
  std::string text;  // raw, still escaped
  int line;
};

struct ParsedTree {
  ChunkTree tree;
  int line = 0;
  std::vector<int> leaf_line;
  std::vector<int> node_line;
};

std::pair<std::string, std::string> split_label(const std::string& raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\\') {
      ++i;
      continue;
    }
    if (raw[i] == ':') return {unescape(raw.substr(0, i)), unescape(raw.substr(i + 1))};
  }
  return {unescape(raw), {}};
}

class BracketParser {
 public:
  BracketParser(const std::vector<Token>& toks, const std::string& name)
      : toks_(toks), name_(name) {}

  ParsedTree parse() {
    ParsedTree out;
    out.line = toks_.front().line;
    while (pos_ < toks_.size()) {
      out.tree.top.push_back(item(out));
    }
    return out;
  }

 private:
  [[noreturn]] void fail(int line, const std::string& msg) { throw ParseError(name_, line, msg); }

  const Token& next(int line) {
    if (pos_ >= toks_.size()) fail(line, "unexpected end of sentence");
    return toks_[pos_++];
  }

  ChildRef item(ParsedTree& out) {
    const Token& open = next(toks_.back().line);
    if (open.kind != Token::Kind::Open) fail(open.line, "expected '(' but found '" + open.text + "'");
    const Token& label = next(open.line);
    if (label.kind != Token::Kind::Atom) fail(label.line, "missing label after '('");
    auto [sym, func] = split_label(label.text);
    if (sym.empty()) fail(label.line, "empty label");

    const Token& t1 = next(label.line);
    if (t1.kind == Token::Kind::Close || t1.kind == Token::Kind::Atom) {
      Leaf leaf{std::nullopt, sym, func};
      if (t1.kind == Token::Kind::Atom) {
        leaf.word = unescape(t1.text);
        const Token& close = next(t1.line);
        if (close.kind != Token::Kind::Close)
          fail(close.line, "leaf (" + sym + " ...) takes a single word");
      }
      out.tree.leaves.push_back(std::move(leaf));
      out.leaf_line.push_back(label.line);
      return ChildRef::leaf(static_cast<int>(out.tree.leaves.size()) - 1);
    }
    const int id = static_cast<int>(out.tree.nodes.size());
    out.tree.nodes.push_back(Node{sym, func, {}});
    out.node_line.push_back(label.line);
    --pos_;
    std::vector<ChildRef> kids;
    while (true) {
      const Token& t = next(label.line);
      if (t.kind == Token::Kind::Close) break;
      if (t.kind == Token::Kind::Atom)
        fail(t.line, "bare word '" + unescape(t.text) + "' inside node " + sym);
      --pos_;
      kids.push_back(item(out));
    }
    out.tree.nodes[id].children = std::move(kids);
    return ChildRef::node(id);
  }

  const std::vector<Token>& toks_;
  const std::string& name_;
  std::size_t pos_ = 0;
};

std::vector<ParsedTree> parse_bracketed(std::istream& in, const std::string& name) {
  std::vector<ParsedTree> out;
  std::vector<Token> toks;
  int depth = 0;
  int lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (depth == 0) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
    }
    for (std::size_t i = 0; i < line.size();) {
      const char c = line[i];
      if (c == ' ' || c == '\t' || c == '\r') {
        ++i;
      } else if (c == '(') {
        toks.push_back({Token::Kind::Open, "(", lineno});
        ++depth;
        ++i;
      } else if (c == ')') {
        if (depth == 0) throw ParseError(name, lineno, "unbalanced ')'");
        toks.push_back({Token::Kind::Close, ")", lineno});
        --depth;
        ++i;
      } else {
        std::string atom;
        while (i < line.size()) {
          const char d = line[i];
          if (d == '\\' && i + 1 < line.size()) {
            atom += d;
            atom += line[i + 1];
            i += 2;
            continue;
          }
          if (d == ' ' || d == '\t' || d == '\r' || d == '(' || d == ')') break;
          atom += d;
          ++i;
        }
        if (depth == 0) throw ParseError(name, lineno, "text outside brackets: '" + atom + "'");
        toks.push_back({Token::Kind::Atom, std::move(atom), lineno});
      }
    }
    if (depth == 0 && !toks.empty()) {
      out.push_back(BracketParser(toks, name).parse());
      toks.clear();
    }
  }
  if (depth != 0) throw ParseError(name, lineno, "unbalanced '(' at end of input");
  return out;
}

// --- columnar format --------------------------------------------------------

struct LinedSequence {
  TaggedSequence seq;
  std::vector<int> lines;
};

std::vector<LinedSequence> parse_columnar(std::istream& in, const std::string& name,
                                          bool require_structure) {
  std::vector<LinedSequence> out;
  LinedSequence cur;
  std::string line;
  int lineno = 0;
  auto flush = [&] {
    if (!cur.seq.empty()) out.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    const auto f = split_tabs(line);
    const std::size_t need = require_structure ? 4 : 2;
    if (f.size() < need || (f.size() != 2 && f.size() != 4))
      throw ParseError(name, lineno,
                       "expected " + std::to_string(need) + " tab-separated columns, found " +
                           std::to_string(f.size()));
    TaggedToken tok;
    if (f[0] != "_") tok.word = unescape_field(f[0]);
    tok.tag.tag = unescape_field(f[1]);
    if (tok.tag.tag.empty()) throw ParseError(name, lineno, "empty POS tag");
    if (f.size() == 4) {
      auto rel = parse_rel(f[2]);
      if (!rel) throw ParseError(name, lineno, "unknown REL symbol '" + f[2] + "'");
      tok.tag.rel = *rel;
      tok.tag.cat = unescape_field(f[3]);
      if (tok.tag.cat.empty()) throw ParseError(name, lineno, "empty CAT");
    }
    cur.seq.push_back(std::move(tok));
    cur.lines.push_back(lineno);
  }
  flush();
  return out;
}

void check_vocab(const ChunkTree& t, const Vocabulary& v, const std::string& name,
                 const std::vector<int>& leaf_line, const std::vector<int>& node_line) {
  for (std::size_t i = 0; i < t.leaves.size(); ++i)
    if (!v.accepts_tag(t.leaves[i].pos))
      throw ParseError(name, leaf_line[i], "undeclared POS tag '" + t.leaves[i].pos + "'");
  for (std::size_t n = 0; n < t.nodes.size(); ++n)
    if (!v.accepts_label(t.nodes[n].cat))
      throw ParseError(name, node_line[n], "undeclared category '" + t.nodes[n].cat + "'");
}

void collect_symbols(Corpus& c) {
  for (const auto& t : c.sentences) {
    for (const auto& l : t.leaves) c.tagset.insert(l.pos);
    for (const auto& n : t.nodes) c.labelset.insert(n.cat);
  }
}

// Copies the subtree rooted at `ref` into `dst`, appending leaves in order.
ChildRef copy_subtree(const ChunkTree& src, const ChildRef& ref, ChunkTree& dst) {
  if (ref.is_leaf()) {
    dst.leaves.push_back(src.leaves[ref.index]);
    return ChildRef::leaf(static_cast<int>(dst.leaves.size()) - 1);
  }
  const Node& n = src.nodes[ref.index];
  const int id = static_cast<int>(dst.nodes.size());
  dst.nodes.push_back(Node{n.cat, n.func, {}});
  std::vector<ChildRef> kids;
  for (const auto& k : n.children) kids.push_back(copy_subtree(src, k, dst));
  dst.nodes[id].children = std::move(kids);
  return ChildRef::node(id);
}

}  // namespace

std::set<std::string> load_symbol_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.insert(t.substr(0, t.find_first_of(" \t")));
  }
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("STAG_DATA_DIR"); env && *env) return env;
  return STAG_DEFAULT_DATA_DIR;
}

Vocabulary default_vocabulary() {
  const auto dir = default_data_dir();
  return Vocabulary{load_symbol_file(dir / "stts.tags"), load_symbol_file(dir / "categories.labels")};
}

Format format_from_path(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".tsv" || ext == ".col" || ext == ".columnar" || ext == ".tags") return Format::Columnar;
  return Format::Bracketed;
}

Format parse_format(const std::string& name) {
  if (name == "bracketed" || name == "trees") return Format::Bracketed;
  if (name == "columnar" || name == "tsv") return Format::Columnar;
  throw std::invalid_argument("unknown format '" + name + "' (bracketed|columnar)");
}

std::vector<ChunkTree> read_bracketed(std::istream& in, const std::string& name) {
  std::vector<ChunkTree> out;
  for (auto& p : parse_bracketed(in, name)) out.push_back(std::move(p.tree));
  return out;
}

void write_bracketed(std::ostream& out, const std::vector<ChunkTree>& trees) {
  for (const auto& t : trees) out << to_bracketed(t) << '\n';
}

std::vector<TaggedSequence> read_tagged(std::istream& in, const std::string& name) {
  std::vector<TaggedSequence> out;
  for (auto& s : parse_columnar(in, name, true)) out.push_back(std::move(s.seq));
  return out;
}

void write_tagged(std::ostream& out, const std::vector<TaggedSequence>& seqs) {
  out << kColumnarHeader << '\n';
  for (const auto& seq : seqs) {
    for (const auto& tok : seq)
      out << (tok.word ? escape_field(*tok.word) : std::string("_")) << '\t'
          << escape_field(tok.tag.tag) << '\t' << rel_symbol(tok.tag.rel) << '\t'
          << escape_field(tok.tag.cat) << '\n';
    out << '\n';
  }
}

std::vector<TaggedSequence> read_tagged(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tagged(in, path.string());
}

void write_tagged(const std::filesystem::path& path, const std::vector<TaggedSequence>& seqs) {
  auto out = open_out(path);
  write_tagged(out, seqs);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

TaggedSequence to_tagged(const ChunkTree& tree) {
  const TagSequence tags = encode_tree(tree);
  TaggedSequence out(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    out[i].word = tree.leaves[i].word;
    out[i].tag = tags[i];
  }
  return out;
}

TagSequence tags_of(const TaggedSequence& seq) {
  TagSequence out;
  out.reserve(seq.size());
  for (const auto& t : seq) out.push_back(t.tag);
  return out;
}

std::vector<PosSequence> read_pos(std::istream& in, const std::string& name) {
  std::vector<PosSequence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    PosSequence seq;
    std::istringstream toks(t);
    std::string tok;
    while (toks >> tok) {
      const auto slash = tok.rfind('/');
      if (slash != std::string::npos && slash > 0 && slash + 1 < tok.size()) {
        seq.words.emplace_back(tok.substr(0, slash));
        seq.tags.push_back(tok.substr(slash + 1));
      } else {
        seq.words.emplace_back(std::nullopt);
        seq.tags.push_back(tok);
      }
    }
    if (seq.tags.empty()) throw ParseError(name, lineno, "empty sequence");
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<PosSequence> load_pos(const std::filesystem::path& path, const std::string& format) {
  auto in = open_in(path);
  std::string fmt = format;
  if (fmt == "auto") {
    const auto ext = path.extension().string();
    if (ext == ".tsv" || ext == ".col" || ext == ".columnar" || ext == ".tags") fmt = "columnar";
    else if (ext == ".trees" || ext == ".brk" || ext == ".mrg") fmt = "bracketed";
    else fmt = "pos";
  }
  std::vector<PosSequence> out;
  if (fmt == "pos") return read_pos(in, path.string());
  if (fmt == "columnar") {
    for (const auto& s : parse_columnar(in, path.string(), false)) {
      PosSequence p;
      for (const auto& t : s.seq) {
        p.words.push_back(t.word);
        p.tags.push_back(t.tag.tag);
      }
      out.push_back(std::move(p));
    }
    return out;
  }
  if (fmt == "bracketed") {
    for (const auto& t : read_bracketed(in, path.string())) {
      PosSequence p;
      for (const auto& l : t.leaves) {
        p.words.push_back(l.word);
        p.tags.push_back(l.pos);
      }
      out.push_back(std::move(p));
    }
    return out;
  }
  throw std::invalid_argument("unknown input format '" + format + "' (pos|columnar|bracketed|auto)");
}

Corpus load_corpus(std::istream& in, Format format, const Vocabulary& vocab,
                   const std::string& name) {
  Corpus c;
  if (format == Format::Bracketed) {
    for (auto& p : parse_bracketed(in, name)) {
      for (const auto& v : validate_tree(p.tree)) {
        int line = p.line;
        if (v.is_leaf && v.index >= 0 && v.index < static_cast<int>(p.leaf_line.size()))
          line = p.leaf_line[v.index];
        if (!v.is_leaf && v.index >= 0 && v.index < static_cast<int>(p.node_line.size()))
          line = p.node_line[v.index];
        throw ParseError(name, line, std::string(violation_name(v.kind)) + ": " + v.message);
      }
      check_vocab(p.tree, vocab, name, p.leaf_line, p.node_line);
      c.sentences.push_back(std::move(p.tree));
    }
  } else {
    for (auto& s : parse_columnar(in, name, true)) {
      for (std::size_t i = 0; i < s.seq.size(); ++i) {
        const auto& tag = s.seq[i].tag;
        if (!vocab.accepts_tag(tag.tag))
          throw ParseError(name, s.lines[i], "undeclared POS tag '" + tag.tag + "'");
        if (tag.cat != kNoneCat && !vocab.accepts_label(tag.cat))
          throw ParseError(name, s.lines[i], "undeclared category '" + tag.cat + "'");
      }
      DecodeResult d = decode_tags(tags_of(s.seq));
      if (!d.repairs.empty()) {
        const auto& r = d.repairs.front();
        const bool token_level =
            r.kind != Repair::Kind::LabelConflict && r.kind != Repair::Kind::Unlabelled;
        const int line = token_level ? s.lines[r.position] : s.lines.front();
        throw ParseError(name, line,
                         "ill-formed structural tags (" + std::string(repair_name(r.kind)) + ")");
      }
      for (std::size_t i = 0; i < s.seq.size(); ++i) d.tree.leaves[i].word = s.seq[i].word;
      c.sentences.push_back(std::move(d.tree));
    }
  }
  collect_symbols(c);
  return c;
}

Corpus load_corpus(const std::filesystem::path& path, Format format, const Vocabulary& vocab) {
  auto in = open_in(path);
  return load_corpus(in, format, vocab, path.string());
}

void write_corpus(std::ostream& out, Format format, const Corpus& corpus) {
  if (format == Format::Bracketed) {
    write_bracketed(out, corpus.sentences);
    return;
  }
  std::vector<TaggedSequence> seqs;
  seqs.reserve(corpus.sentences.size());
  for (const auto& t : corpus.sentences) seqs.push_back(to_tagged(t));
  write_tagged(out, seqs);
}

void save_corpus(const std::filesystem::path& path, Format format, const Corpus& corpus) {
  auto out = open_out(path);
  write_corpus(out, format, corpus);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::set<std::string> default_chunk_categories() { return {"NP", "PP", "AP", "NM"}; }

Corpus extract_chunks(const Corpus& corpus, const std::set<std::string>& categories) {
  if (categories.empty()) throw std::invalid_argument("extract_chunks: no categories selected");
  Corpus out;
  for (const auto& t : corpus.sentences) {
    std::function<void(const ChildRef&)> visit = [&](const ChildRef& c) {
      if (c.is_leaf()) return;
      const Node& n = t.nodes[c.index];
      if (categories.contains(n.cat)) {
        ChunkTree chunk;
        chunk.top.push_back(copy_subtree(t, c, chunk));
        out.sentences.push_back(std::move(chunk));
        return;
      }
      for (const auto& k : n.children) visit(k);
    };
    for (const auto& c : t.top) visit(c);
  }
  collect_symbols(out);
  return out;
}

Corpus chunk_sentences(const Corpus& corpus, const std::set<std::string>& categories) {
  if (categories.empty()) throw std::invalid_argument("chunk_sentences: no categories selected");
  Corpus out;
  for (const auto& t : corpus.sentences) {
    ChunkTree s;
    std::function<void(const ChildRef&)> visit = [&](const ChildRef& c) {
      if (c.is_leaf()) {
        s.top.push_back(copy_subtree(t, c, s));
        return;
      }
      const Node& n = t.nodes[c.index];
      if (categories.contains(n.cat)) {
        s.top.push_back(copy_subtree(t, c, s));
        return;
      }
      for (const auto& k : n.children) visit(k);
    };
    for (const auto& c : t.top) visit(c);
    out.sentences.push_back(std::move(s));
  }
  collect_symbols(out);
  return out;
}

std::vector<int> FoldPlan::members(int fold) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(assignment.size()); ++i)
    if (assignment[i] == fold) out.push_back(i);
  return out;
}

std::vector<int> FoldPlan::complement(int fold) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(assignment.size()); ++i)
    if (assignment[i] != fold) out.push_back(i);
  return out;
}

std::vector<int> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<int> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    // Unbiased draw from [0, i); the engine is specified bit-exactly by the
    // standard, std::uniform_int_distribution is not.
    const std::uint64_t range = i;
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % range;
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    std::swap(perm[i - 1], perm[r % range]);
  }
  return perm;
}

FoldPlan make_folds(std::size_t sentences, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("fold count must be at least 2");
  if (static_cast<std::size_t>(k) > sentences)
    throw std::invalid_argument("fold count " + std::to_string(k) + " exceeds sentence count " +
                                std::to_string(sentences));
  FoldPlan plan;
  plan.folds = k;
  plan.seed = seed;
  plan.assignment.assign(sentences, 0);
  const auto perm = seeded_permutation(sentences, seed);
  for (std::size_t j = 0; j < sentences; ++j) plan.assignment[perm[j]] = static_cast<int>(j % k);
  return plan;
}

}  // namespace stag
