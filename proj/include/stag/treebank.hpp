#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stag {

// Structural relation between a token and its predecessor. Enumerator order
// is the precedence order used by the encoder.
enum class Rel : std::uint8_t {
  Same = 0,     // "0"   parent(w_i) == parent(w_{i-1})
  Up = 1,       // "+"   parent(w_i) == parent^2(w_{i-1})
  UpUp = 2,     // "++"  parent(w_i) == parent^3(w_{i-1})
  Down = 3,     // "-"   parent^2(w_i) == parent(w_{i-1})
  DownDown = 4, // "--"  parent^3(w_i) == parent(w_{i-1})
  Sibling = 5,  // "="   parent^2(w_i) == parent^2(w_{i-1})
  Other = 6,    // "1"
};

inline constexpr int kRelCount = 7;
inline constexpr std::array<Rel, kRelCount> kAllRels = {
    Rel::Same, Rel::Up, Rel::UpUp, Rel::Down, Rel::DownDown, Rel::Sibling, Rel::Other};

std::string_view rel_symbol(Rel r);
std::optional<Rel> parse_rel(std::string_view s);

// Category of tokens that are not inside any chunk.
inline constexpr std::string_view kNoneCat = "NONE";

// Leaves may sit at most this many edges below the virtual root.
inline constexpr int kMaxDepth = 4;

struct StructuralTag {
  std::string tag;
  Rel rel = Rel::Other;
  std::string cat{kNoneCat};

  bool out_of_chunk() const { return cat == kNoneCat; }
  friend bool operator==(const StructuralTag&, const StructuralTag&) = default;
  friend auto operator<=>(const StructuralTag& a, const StructuralTag& b) {
    if (auto c = a.tag <=> b.tag; c != 0) return c;
    if (auto c = rel_symbol(a.rel) <=> rel_symbol(b.rel); c != 0) return c;
    return a.cat <=> b.cat;
  }
};

using TagSequence = std::vector<StructuralTag>;

std::vector<std::string> pos_projection(const TagSequence& seq);

struct ChildRef {
  enum class Kind : std::uint8_t { Leaf, Node };
  Kind kind = Kind::Leaf;
  int index = 0;

  static ChildRef leaf(int i) { return {Kind::Leaf, i}; }
  static ChildRef node(int i) { return {Kind::Node, i}; }
  bool is_leaf() const { return kind == Kind::Leaf; }
  friend bool operator==(const ChildRef&, const ChildRef&) = default;
};

struct Leaf {
  std::optional<std::string> word;
  std::string pos;
  std::string func;  // grammatical function, carried through untouched
  friend bool operator==(const Leaf&, const Leaf&) = default;
};

struct Node {
  std::string cat;
  std::string func;
  std::vector<ChildRef> children;
  friend bool operator==(const Node&, const Node&) = default;
};

// Depth-limited constituency tree over a token sequence. `top` holds the
// children of the virtual root. Trees built by this library keep nodes in
// pre-order; equality compares canonical forms, so node numbering does not
// matter.
struct ChunkTree {
  std::vector<Leaf> leaves;
  std::vector<Node> nodes;
  std::vector<ChildRef> top;

  std::size_t size() const { return leaves.size(); }
  std::vector<std::string> pos() const;

  friend bool operator==(const ChunkTree& a, const ChunkTree& b);
};

// Renumbers nodes in pre-order and drops unreachable ones.
ChunkTree canonical(const ChunkTree& tree);

// Builds a tree whose only structure is root-level leaves.
ChunkTree flat_tree(const std::vector<std::string>& pos,
                    const std::vector<std::optional<std::string>>& words = {});

struct Violation {
  enum class Kind {
    BadIndex,
    MultipleParents,
    Unattached,
    Cycle,
    EmptyNode,
    Label,
    Contiguity,
    Order,
    Depth,
    // encodability only
    NoDirectLeaf,
    Unencodable,
  };
  Kind kind;
  bool is_leaf = false;
  int index = -1;
  std::string message;
};

std::string_view violation_name(Violation::Kind k);

std::vector<Violation> validate_tree(const ChunkTree& tree);

// Conditions under which decode_tags(encode_tree(t)) reproduces t. Includes
// validate_tree's violations.
std::vector<Violation> encodability_violations(const ChunkTree& tree);

class DepthError : public std::runtime_error {
 public:
  DepthError(int leaf, int depth);
  int leaf() const { return leaf_; }
  int depth() const { return depth_; }

 private:
  int leaf_;
  int depth_;
};

TagSequence encode_tree(const ChunkTree& tree);

struct Repair {
  enum class Kind {
    FirstToken,     // rel of token 0 was not 1
    NoneCat,        // rel != 1 with cat NONE
    ClampedClose,   // close/attach target outside the open chunk
    BadOpen,        // open with no enclosing chunk
    DepthOverflow,  // structure would exceed kMaxDepth
    LabelConflict,  // leaves attached to one node disagree on cat
    Unlabelled,     // node received no cat vote
  };
  Kind kind;
  int position;  // token index, or node index for label repairs
  Rel original = Rel::Other;
  Rel applied = Rel::Other;
};

std::string_view repair_name(Repair::Kind k);

struct DecodeResult {
  ChunkTree tree;
  std::vector<Repair> repairs;
  TagSequence applied;  // rel/cat actually used per token
};

// Inverse of encode_tree. Total: ill-formed sequences are repaired and each
// repair is reported.
DecodeResult decode_tags(const TagSequence& seq);

// Bracketed rendering, one line, leaves as (POS word).
std::string to_bracketed(const ChunkTree& tree);

// Leaf interval [first, last] covered by each node, in node order.
std::vector<std::pair<int, int>> node_spans(const ChunkTree& tree);

}  // namespace stag
