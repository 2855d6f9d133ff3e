#include "stag/treebank.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "text_escape.hpp"

namespace stag {

namespace {

constexpr int kRoot = -1;
constexpr int kUnattached = -2;

struct Parents {
  std::vector<int> leaf;  // parent node of each leaf, kRoot or kUnattached
  std::vector<int> node;
};

// Parent links as declared by the child lists. Out-of-range references are
// skipped; the first parent wins when a child is listed twice.
Parents collect_parents(const ChunkTree& t) {
  Parents p{std::vector<int>(t.leaves.size(), kUnattached),
            std::vector<int>(t.nodes.size(), kUnattached)};
  auto link = [&](const ChildRef& c, int parent) {
    auto& slot = c.is_leaf() ? p.leaf : p.node;
    if (c.index < 0 || c.index >= static_cast<int>(slot.size())) return;
    if (slot[c.index] == kUnattached) slot[c.index] = parent;
  };
  for (const auto& c : t.top) link(c, kRoot);
  for (int n = 0; n < static_cast<int>(t.nodes.size()); ++n)
    for (const auto& c : t.nodes[n].children) link(c, n);
  return p;
}

// Real ancestors of a leaf, innermost first. Stops at the virtual root.
std::vector<int> ancestor_chain(const Parents& p, int leaf) {
  std::vector<int> chain;
  int cur = p.leaf[leaf];
  while (cur >= 0 && chain.size() <= p.node.size()) {
    chain.push_back(cur);
    cur = p.node[cur];
  }
  return chain;
}

}  // namespace

std::string_view rel_symbol(Rel r) {
  switch (r) {
    case Rel::Same: return "0";
    case Rel::Up: return "+";
    case Rel::UpUp: return "++";
    case Rel::Down: return "-";
    case Rel::DownDown: return "--";
    case Rel::Sibling: return "=";
    case Rel::Other: return "1";
  }
  return "1";
}

std::optional<Rel> parse_rel(std::string_view s) {
  for (Rel r : kAllRels)
    if (rel_symbol(r) == s) return r;
  return std::nullopt;
}

std::vector<std::string> pos_projection(const TagSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (const auto& s : seq) out.push_back(s.tag);
  return out;
}

std::vector<std::string> ChunkTree::pos() const {
  std::vector<std::string> out;
  out.reserve(leaves.size());
  for (const auto& l : leaves) out.push_back(l.pos);
  return out;
}

ChunkTree canonical(const ChunkTree& tree) {
  ChunkTree out;
  out.leaves = tree.leaves;
  std::vector<bool> seen(tree.nodes.size(), false);
  std::function<ChildRef(const ChildRef&)> visit = [&](const ChildRef& c) -> ChildRef {
    if (c.is_leaf()) return c;
    if (c.index < 0 || c.index >= static_cast<int>(tree.nodes.size()) || seen[c.index])
      return c;
    seen[c.index] = true;
    const int id = static_cast<int>(out.nodes.size());
    const Node& src = tree.nodes[c.index];
    out.nodes.push_back(Node{src.cat, src.func, {}});
    std::vector<ChildRef> kids;
    kids.reserve(src.children.size());
    for (const auto& k : src.children) kids.push_back(visit(k));
    out.nodes[id].children = std::move(kids);
    return ChildRef::node(id);
  };
  for (const auto& c : tree.top) out.top.push_back(visit(c));
  return out;
}

bool operator==(const ChunkTree& a, const ChunkTree& b) {
  if (a.leaves != b.leaves) return false;
  const ChunkTree ca = canonical(a);
  const ChunkTree cb = canonical(b);
  return ca.nodes == cb.nodes && ca.top == cb.top;
}

ChunkTree flat_tree(const std::vector<std::string>& pos,
                    const std::vector<std::optional<std::string>>& words) {
  ChunkTree t;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    Leaf l;
    l.pos = pos[i];
    if (i < words.size()) l.word = words[i];
    t.leaves.push_back(std::move(l));
    t.top.push_back(ChildRef::leaf(static_cast<int>(i)));
  }
  return t;
}

std::string_view violation_name(Violation::Kind k) {
  using K = Violation::Kind;
  switch (k) {
    case K::BadIndex: return "bad-index";
    case K::MultipleParents: return "multiple-parents";
    case K::Unattached: return "unattached";
    case K::Cycle: return "cycle";
    case K::EmptyNode: return "empty-node";
    case K::Label: return "label";
    case K::Contiguity: return "contiguity";
    case K::Order: return "order";
    case K::Depth: return "depth";
    case K::NoDirectLeaf: return "no-direct-leaf";
    case K::Unencodable: return "unencodable";
  }
  return "?";
}

std::vector<Violation> validate_tree(const ChunkTree& t) {
  using K = Violation::Kind;
  std::vector<Violation> out;
  const int nl = static_cast<int>(t.leaves.size());
  const int nn = static_cast<int>(t.nodes.size());
  auto add = [&](K k, bool leaf, int idx, std::string msg) {
    out.push_back(Violation{k, leaf, idx, std::move(msg)});
  };

  std::vector<int> leaf_refs(nl, 0), node_refs(nn, 0);
  auto count = [&](const ChildRef& c, const std::string& where) {
    const int limit = c.is_leaf() ? nl : nn;
    if (c.index < 0 || c.index >= limit) {
      add(K::BadIndex, c.is_leaf(), c.index,
          where + " references missing " + (c.is_leaf() ? "leaf " : "node ") +
              std::to_string(c.index));
      return;
    }
    ++(c.is_leaf() ? leaf_refs : node_refs)[c.index];
  };
  for (const auto& c : t.top) count(c, "root");
  for (int n = 0; n < nn; ++n)
    for (const auto& c : t.nodes[n].children) count(c, "node " + std::to_string(n));

  for (int i = 0; i < nl; ++i) {
    if (leaf_refs[i] == 0) add(K::Unattached, true, i, "leaf has no parent");
    if (leaf_refs[i] > 1) add(K::MultipleParents, true, i, "leaf has several parents");
    if (t.leaves[i].pos.empty()) add(K::Label, true, i, "leaf has empty POS tag");
  }
  for (int n = 0; n < nn; ++n) {
    if (node_refs[n] == 0) add(K::Unattached, false, n, "node has no parent");
    if (node_refs[n] > 1) add(K::MultipleParents, false, n, "node has several parents");
    if (t.nodes[n].children.empty()) add(K::EmptyNode, false, n, "node has no children");
    if (t.nodes[n].cat.empty() || t.nodes[n].cat == kNoneCat)
      add(K::Label, false, n, "node label '" + t.nodes[n].cat + "' is not a category");
  }

  // Walk from the root; depth and leaf sets per node.
  std::vector<int> state(nn, 0);  // 0 new, 1 on stack, 2 done
  std::vector<int> lo(nn, nl), hi(nn, -1), cnt(nn, 0);
  std::function<void(const ChildRef&, int, int&, int&, int&)> walk =
      [&](const ChildRef& c, int depth, int& mn, int& mx, int& k) {
        const int limit = c.is_leaf() ? nl : nn;
        if (c.index < 0 || c.index >= limit) return;
        if (c.is_leaf()) {
          if (depth > kMaxDepth)
            add(K::Depth, true, c.index,
                "leaf at depth " + std::to_string(depth) + " exceeds " +
                    std::to_string(kMaxDepth));
          mn = std::min(mn, c.index);
          mx = std::max(mx, c.index);
          ++k;
          return;
        }
        const int n = c.index;
        if (state[n] == 1) {
          add(K::Cycle, false, n, "node is its own ancestor");
          return;
        }
        if (state[n] == 2) return;
        state[n] = 1;
        int prev_first = -1;
        for (const auto& kid : t.nodes[n].children) {
          int cmn = nl, cmx = -1, ck = 0;
          walk(kid, depth + 1, cmn, cmx, ck);
          if (ck > 0) {
            if (cmn <= prev_first)
              add(K::Order, false, n, "children out of leaf order");
            prev_first = cmn;
          }
          lo[n] = std::min(lo[n], cmn);
          hi[n] = std::max(hi[n], cmx);
          cnt[n] += ck;
        }
        state[n] = 2;
        if (cnt[n] > 0 && hi[n] - lo[n] + 1 != cnt[n])
          add(K::Contiguity, false, n,
              "node spans leaves " + std::to_string(lo[n]) + ".." + std::to_string(hi[n]) +
                  " but covers only " + std::to_string(cnt[n]));
        mn = std::min(mn, lo[n]);
        mx = std::max(mx, hi[n]);
        k += cnt[n];
      };
  int prev_first = -1;
  for (const auto& c : t.top) {
    int mn = nl, mx = -1, k = 0;
    walk(c, 1, mn, mx, k);
    if (k > 0) {
      if (mn <= prev_first) add(K::Order, c.is_leaf(), c.index, "root items out of leaf order");
      prev_first = mn;
    }
  }
  for (int n = 0; n < nn; ++n)
    if (state[n] == 0 && node_refs[n] > 0)
      add(K::Cycle, false, n, "node is not reachable from the root");
  return out;
}

std::vector<Violation> encodability_violations(const ChunkTree& t) {
  using K = Violation::Kind;
  auto out = validate_tree(t);
  if (!out.empty()) return out;
  for (int n = 0; n < static_cast<int>(t.nodes.size()); ++n) {
    const auto& kids = t.nodes[n].children;
    if (std::none_of(kids.begin(), kids.end(), [](const ChildRef& c) { return c.is_leaf(); }))
      out.push_back({K::NoDirectLeaf, false, n, "node has no directly attached leaf"});
  }
  const Parents p = collect_parents(t);
  for (int i = 1; i < static_cast<int>(t.leaves.size()); ++i) {
    const auto cur = ancestor_chain(p, i);
    const auto prev = ancestor_chain(p, i - 1);
    for (std::size_t a = 0; a < cur.size(); ++a) {
      auto it = std::find(prev.begin(), prev.end(), cur[a]);
      if (it == prev.end()) continue;
      const int da = static_cast<int>(a) + 1;
      const int db = static_cast<int>(it - prev.begin()) + 1;
      const bool ok = (da == 1 && db <= 3) || (db == 1 && da <= 3) || (da == 2 && db == 2);
      if (!ok)
        out.push_back({K::Unencodable, true, i,
                       "lowest common ancestor with the preceding leaf is " +
                           std::to_string(da) + "/" + std::to_string(db) + " steps away"});
      break;
    }
  }
  return out;
}

DepthError::DepthError(int leaf, int depth)
    : std::runtime_error("leaf " + std::to_string(leaf) + " is at depth " +
                         std::to_string(depth) + ", deeper than " + std::to_string(kMaxDepth)),
      leaf_(leaf),
      depth_(depth) {}

TagSequence encode_tree(const ChunkTree& tree) {
  for (const auto& v : validate_tree(tree)) {
    if (v.kind == Violation::Kind::Depth) continue;
    throw std::invalid_argument("cannot encode malformed tree: " + v.message);
  }
  const Parents p = collect_parents(tree);
  const int n = static_cast<int>(tree.leaves.size());
  std::vector<std::vector<int>> chains(n);
  for (int i = 0; i < n; ++i) {
    chains[i] = ancestor_chain(p, i);
    const int depth = static_cast<int>(chains[i].size()) + 1;
    if (depth > kMaxDepth) throw DepthError(i, depth);
  }
  // k-th parent (1-based) or kRoot if the chain reaches the virtual root.
  auto par = [&](int leaf, int k) {
    const auto& c = chains[leaf];
    return k <= static_cast<int>(c.size()) ? c[k - 1] : kRoot;
  };
  auto same = [&](int a, int ka, int b, int kb) {
    const int x = par(a, ka);
    return x != kRoot && x == par(b, kb);
  };

  TagSequence out(n);
  for (int i = 0; i < n; ++i) {
    StructuralTag& s = out[i];
    s.tag = tree.leaves[i].pos;
    s.cat = chains[i].empty() ? std::string(kNoneCat) : tree.nodes[chains[i][0]].cat;
    s.rel = Rel::Other;
    if (i == 0) continue;
    if (same(i, 1, i - 1, 1)) s.rel = Rel::Same;
    else if (same(i, 1, i - 1, 2)) s.rel = Rel::Up;
    else if (same(i, 1, i - 1, 3)) s.rel = Rel::UpUp;
    else if (same(i, 2, i - 1, 1)) s.rel = Rel::Down;
    else if (same(i, 3, i - 1, 1)) s.rel = Rel::DownDown;
    else if (same(i, 2, i - 1, 2)) s.rel = Rel::Sibling;
  }
  return out;
}

std::string_view repair_name(Repair::Kind k) {
  using K = Repair::Kind;
  switch (k) {
    case K::FirstToken: return "first-token";
    case K::NoneCat: return "none-cat";
    case K::ClampedClose: return "clamped-close";
    case K::BadOpen: return "bad-open";
    case K::DepthOverflow: return "depth-overflow";
    case K::LabelConflict: return "label-conflict";
    case K::Unlabelled: return "unlabelled";
  }
  return "?";
}

namespace {

// Builds a tree left to right. `chain_` holds the open ancestors of the
// previous leaf, innermost first; its last entry is a root-level node.
// Ancestors above that entry may not have been seen yet and are created on
// demand ("lifting").
class TreeBuilder {
 public:
  explicit TreeBuilder(const TagSequence& seq) : seq_(seq) {}

  DecodeResult run() {
    for (int i = 0; i < static_cast<int>(seq_.size()); ++i) place(i);
    resolve_labels();
    // Label repairs refer to creation-order node ids; map them to pre-order.
    ChunkTree canon = canonical(result_.tree);
    std::vector<int> remap(result_.tree.nodes.size(), -1);
    map_nodes(result_.tree, canon, remap);
    for (auto& r : result_.repairs)
      if (r.kind == Repair::Kind::LabelConflict || r.kind == Repair::Kind::Unlabelled)
        r.position = remap[r.position];
    result_.tree = std::move(canon);
    for (std::size_t i = 0; i < result_.applied.size(); ++i) {
      const int parent = leaf_parent_[i];
      result_.applied[i].cat =
          parent < 0 ? std::string(kNoneCat) : result_.tree.nodes[remap[parent]].cat;
    }
    return std::move(result_);
  }

 private:
  struct Vote {
    std::map<std::string, int> counts;
    std::string first;
  };

  int new_node(int parent) {
    const int id = static_cast<int>(nodes().size());
    nodes().push_back(Node{});
    votes_.emplace_back();
    if (parent == kRoot) top().push_back(ChildRef::node(id));
    else nodes()[parent].children.push_back(ChildRef::node(id));
    return id;
  }

  void attach_leaf(int i, int parent) {
    if (parent == kRoot) top().push_back(ChildRef::leaf(i));
    else nodes()[parent].children.push_back(ChildRef::leaf(i));
    leaf_parent_.push_back(parent);
  }

  void vote(int node, const std::string& cat) {
    auto& v = votes_[node];
    if (v.counts.empty()) v.first = cat;
    ++v.counts[cat];
  }

  // Inserts a fresh root-level node above the outermost open node.
  void lift() {
    const int old_top = chain_.back();
    const int id = static_cast<int>(nodes().size());
    nodes().push_back(Node{"", "", {ChildRef::node(old_top)}});
    votes_.emplace_back();
    top().back() = ChildRef::node(id);
    chain_.push_back(id);
    ++height_;
  }

  void note(Repair::Kind k, int i, Rel from) {
    result_.repairs.push_back(Repair{k, i, from, Rel::Other});
  }

  void place(int i) {
    const StructuralTag& s = seq_[i];
    result_.tree.leaves.push_back(Leaf{std::nullopt, s.tag, ""});
    Rel rel = s.rel;
    const bool none = s.cat == kNoneCat;
    const int m = static_cast<int>(chain_.size());

    if (i == 0 && rel != Rel::Other) {
      note(Repair::Kind::FirstToken, i, rel);
      rel = Rel::Other;
    } else if (none && rel != Rel::Other) {
      note(Repair::Kind::NoneCat, i, rel);
      rel = Rel::Other;
    }

    // Number of lifts needed before the action and the resulting leaf depth.
    int lifts = 0;
    int depth = 0;
    bool feasible = true;
    Repair::Kind failure = Repair::Kind::ClampedClose;
    switch (rel) {
      case Rel::Same:
        feasible = m >= 1;
        depth = m + 1;
        break;
      case Rel::Up:
        feasible = m >= 1;
        lifts = std::max(0, 2 - m);
        depth = std::max(m, 2);
        break;
      case Rel::UpUp:
        feasible = m >= 1;
        lifts = std::max(0, 3 - m);
        depth = std::max(m - 1, 2);
        break;
      case Rel::Down:
        failure = Repair::Kind::BadOpen;
        feasible = m >= 1;
        depth = m + 2;
        break;
      case Rel::DownDown:
        failure = Repair::Kind::BadOpen;
        feasible = m >= 1;
        depth = m + 3;
        break;
      case Rel::Sibling:
        failure = Repair::Kind::BadOpen;
        feasible = m >= 1;
        lifts = std::max(0, 2 - m);
        depth = std::max(m + 1, 3);
        break;
      case Rel::Other:
        break;
    }
    if (rel != Rel::Other && feasible &&
        (height_ + lifts > kMaxDepth || depth > kMaxDepth)) {
      feasible = false;
      failure = Repair::Kind::DepthOverflow;
    }
    if (!feasible) {
      note(failure, i, rel);
      rel = Rel::Other;
    }
    for (int k = 0; k < lifts && rel != Rel::Other; ++k) lift();

    switch (rel) {
      case Rel::Same:
        attach_leaf(i, chain_[0]);
        vote(chain_[0], s.cat);
        break;
      case Rel::Up:
        chain_.erase(chain_.begin());
        attach_leaf(i, chain_[0]);
        vote(chain_[0], s.cat);
        break;
      case Rel::UpUp:
        chain_.erase(chain_.begin(), chain_.begin() + 2);
        attach_leaf(i, chain_[0]);
        vote(chain_[0], s.cat);
        break;
      case Rel::Down: {
        const int n = new_node(chain_[0]);
        chain_.insert(chain_.begin(), n);
        attach_leaf(i, n);
        vote(n, s.cat);
        break;
      }
      case Rel::DownDown: {
        const int q = new_node(chain_[0]);
        const int n = new_node(q);
        chain_.insert(chain_.begin(), {n, q});
        attach_leaf(i, n);
        vote(n, s.cat);
        break;
      }
      case Rel::Sibling: {
        chain_.erase(chain_.begin());
        const int n = new_node(chain_[0]);
        chain_.insert(chain_.begin(), n);
        attach_leaf(i, n);
        vote(n, s.cat);
        break;
      }
      case Rel::Other:
        chain_.clear();
        height_ = 0;
        if (none) {
          attach_leaf(i, kRoot);
        } else {
          const int n = new_node(kRoot);
          chain_.push_back(n);
          attach_leaf(i, n);
          vote(n, s.cat);
        }
        break;
    }
    const int leaf_depth = static_cast<int>(chain_.size()) + 1;
    if (!chain_.empty()) height_ = std::max(height_, leaf_depth);
    if (!result_.repairs.empty() && result_.repairs.back().position == i &&
        result_.repairs.back().original == s.rel)
      result_.repairs.back().applied = rel;
    StructuralTag applied = s;
    applied.rel = rel;
    result_.applied.push_back(std::move(applied));
  }

  void resolve_labels() {
    auto& ns = nodes();
    std::vector<bool> done(ns.size(), false);
    std::function<void(int)> resolve = [&](int n) {
      if (done[n]) return;
      done[n] = true;
      for (const auto& c : ns[n].children)
        if (!c.is_leaf()) resolve(c.index);
      const Vote& v = votes_[n];
      if (v.counts.empty()) {
        result_.repairs.push_back(Repair{Repair::Kind::Unlabelled, n, Rel::Other, Rel::Other});
        for (const auto& c : ns[n].children)
          if (!c.is_leaf()) {
            ns[n].cat = ns[c.index].cat;
            break;
          }
        return;
      }
      std::string best = v.first;
      int best_count = v.counts.at(best);
      for (const auto& [cat, count] : v.counts)
        if (count > best_count) {
          best = cat;
          best_count = count;
        }
      if (v.counts.size() > 1)
        result_.repairs.push_back(
            Repair{Repair::Kind::LabelConflict, n, Rel::Other, Rel::Other});
      ns[n].cat = best;
    };
    for (int n = 0; n < static_cast<int>(ns.size()); ++n) resolve(n);
  }

  static void map_nodes(const ChunkTree& from, const ChunkTree& to, std::vector<int>& remap) {
    std::function<void(const ChildRef&, const ChildRef&)> walk = [&](const ChildRef& a,
                                                                     const ChildRef& b) {
      if (a.is_leaf()) return;
      remap[a.index] = b.index;
      const auto& ka = from.nodes[a.index].children;
      const auto& kb = to.nodes[b.index].children;
      for (std::size_t k = 0; k < ka.size(); ++k) walk(ka[k], kb[k]);
    };
    for (std::size_t k = 0; k < from.top.size(); ++k) walk(from.top[k], to.top[k]);
  }

  std::vector<Node>& nodes() { return result_.tree.nodes; }
  std::vector<ChildRef>& top() { return result_.tree.top; }

  const TagSequence& seq_;
  DecodeResult result_;
  std::vector<int> chain_;
  std::vector<int> leaf_parent_;
  std::vector<Vote> votes_;
  int height_ = 0;  // deepest leaf depth in the current root-level chunk
};

}  // namespace

DecodeResult decode_tags(const TagSequence& seq) { return TreeBuilder(seq).run(); }

std::vector<std::pair<int, int>> node_spans(const ChunkTree& t) {
  std::vector<std::pair<int, int>> spans(t.nodes.size(), {-1, -1});
  std::function<std::pair<int, int>(const ChildRef&)> walk =
      [&](const ChildRef& c) -> std::pair<int, int> {
    if (c.is_leaf()) return {c.index, c.index};
    std::pair<int, int> s{static_cast<int>(t.leaves.size()), -1};
    for (const auto& k : t.nodes[c.index].children) {
      auto ks = walk(k);
      s.first = std::min(s.first, ks.first);
      s.second = std::max(s.second, ks.second);
    }
    spans[c.index] = s;
    return s;
  };
  for (const auto& c : t.top) walk(c);
  return spans;
}

std::string to_bracketed(const ChunkTree& t) {
  std::ostringstream os;
  std::function<void(const ChildRef&)> emit = [&](const ChildRef& c) {
    os << '(';
    if (c.is_leaf()) {
      const Leaf& l = t.leaves[c.index];
      os << escape_atom(l.pos);
      if (!l.func.empty()) os << ':' << escape_atom(l.func);
      if (l.word) os << ' ' << escape_atom(*l.word);
    } else {
      const Node& n = t.nodes[c.index];
      os << escape_atom(n.cat);
      if (!n.func.empty()) os << ':' << escape_atom(n.func);
      for (const auto& k : n.children) {
        os << ' ';
        emit(k);
      }
    }
    os << ')';
  };
  for (std::size_t i = 0; i < t.top.size(); ++i) {
    if (i) os << ' ';
    emit(t.top[i]);
  }
  return os.str();
}

}  // namespace stag
