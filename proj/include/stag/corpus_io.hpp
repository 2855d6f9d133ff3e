#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "stag/treebank.hpp"

namespace stag {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, int line, const std::string& what);
  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

// Declared tag and label inventories. An empty set accepts anything.
struct Vocabulary {
  std::set<std::string> tags;
  std::set<std::string> labels;

  bool accepts_tag(const std::string& t) const { return tags.empty() || tags.contains(t); }
  bool accepts_label(const std::string& l) const {
    return labels.empty() || labels.contains(l);
  }
};

// One symbol per line; text after the first whitespace and '#' comments are
// ignored.
std::set<std::string> load_symbol_file(const std::filesystem::path& path);

// Directory holding the shipped tagset, label set and pattern file.
std::filesystem::path default_data_dir();
Vocabulary default_vocabulary();

struct Corpus {
  std::vector<ChunkTree> sentences;
  std::set<std::string> tagset;
  std::set<std::string> labelset;
};

enum class Format { Bracketed, Columnar };

Format format_from_path(const std::filesystem::path& p);
Format parse_format(const std::string& name);

// Bracketed: one sentence per line (continued while parentheses are open),
// items `(CAT child ...)`, leaves `(POS word)` or `(POS)`; an optional
// `:FUNC` suffix on labels carries a grammatical function.
std::vector<ChunkTree> read_bracketed(std::istream& in, const std::string& name = "<stream>");
void write_bracketed(std::ostream& out, const std::vector<ChunkTree>& trees);

// Columnar: header line, then `word TAB pos TAB rel TAB cat` per token and a
// blank line after each sequence. `_` marks a missing word.
inline constexpr std::string_view kColumnarHeader = "# stag-columnar 1\tword\tpos\trel\tcat";

struct TaggedToken {
  std::optional<std::string> word;
  StructuralTag tag;
};
using TaggedSequence = std::vector<TaggedToken>;

std::vector<TaggedSequence> read_tagged(std::istream& in, const std::string& name = "<stream>");
void write_tagged(std::ostream& out, const std::vector<TaggedSequence>& seqs);
std::vector<TaggedSequence> read_tagged(const std::filesystem::path& path);
void write_tagged(const std::filesystem::path& path, const std::vector<TaggedSequence>& seqs);

TaggedSequence to_tagged(const ChunkTree& tree);
TagSequence tags_of(const TaggedSequence& seq);

// Raw POS input for parsing: one sequence per line, tokens `word/POS` or
// `POS`. Columnar and bracketed files are accepted too (only words and POS
// are used).
struct PosSequence {
  std::vector<std::optional<std::string>> words;
  std::vector<std::string> tags;
};
std::vector<PosSequence> read_pos(std::istream& in, const std::string& name = "<stream>");
std::vector<PosSequence> load_pos(const std::filesystem::path& path, const std::string& format);

Corpus load_corpus(const std::filesystem::path& path, Format format, const Vocabulary& vocab);
Corpus load_corpus(std::istream& in, Format format, const Vocabulary& vocab,
                   const std::string& name = "<stream>");
void save_corpus(const std::filesystem::path& path, Format format, const Corpus& corpus);
void write_corpus(std::ostream& out, Format format, const Corpus& corpus);

// Categories extracted as chunks by default: NP, PP, AP and the
// complex-adverbial stand-ins (AP, NM).
std::set<std::string> default_chunk_categories();

// One tree per maximal node of a selected category; everything outside such
// nodes is dropped.
Corpus extract_chunks(const Corpus& corpus, const std::set<std::string>& categories);

// Whole sentences with maximal selected nodes as root-level chunks and every
// other token attached to the root.
Corpus chunk_sentences(const Corpus& corpus, const std::set<std::string>& categories);

struct FoldPlan {
  int folds = 10;
  std::uint64_t seed = 0;
  std::vector<int> assignment;  // sentence index -> fold id

  std::vector<int> members(int fold) const;
  std::vector<int> complement(int fold) const;
};

FoldPlan make_folds(std::size_t sentences, int k, std::uint64_t seed);

// Seeded permutation of 0..n-1; identical across platforms.
std::vector<int> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace stag
