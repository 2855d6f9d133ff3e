#include "stag/features.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "stag/corpus_io.hpp"

namespace stag {

namespace {

constexpr const char* kBoundarySym = "<s>";
constexpr const char* kUnknownSym = "<unk>";
constexpr std::uint32_t kProjMask = (1u << 27) - 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint8_t parse_position(const std::string& field, const std::string& line) {
  const std::string f = trim(field);
  if (f == "-" || f.empty()) return 0;
  std::uint8_t mask = 0;
  std::stringstream ss(f);
  std::string attr;
  while (std::getline(ss, attr, ',')) {
    attr = trim(attr);
    std::uint8_t bit = 0;
    if (attr == "r") bit = kAttrRel;
    else if (attr == "t") bit = kAttrTag;
    else if (attr == "c") bit = kAttrCat;
    else if (attr == "r~sibl" || attr == "rsibl") bit = kAttrRelSibl;
    else throw std::invalid_argument("unknown attribute '" + attr + "' in pattern '" + line + "'");
    if (mask & bit) throw std::invalid_argument("duplicate attribute in pattern '" + line + "'");
    mask |= bit;
  }
  if ((mask & kAttrRel) && (mask & kAttrRelSibl))
    throw std::invalid_argument("r and r~sibl are exclusive within a position: '" + line + "'");
  return mask;
}

std::string position_to_string(std::uint8_t m) {
  if (m == 0) return "-";
  std::string out;
  auto add = [&](const char* s) {
    if (!out.empty()) out += ',';
    out += s;
  };
  if (m & kAttrRel) add("r");
  if (m & kAttrRelSibl) add("r~sibl");
  if (m & kAttrTag) add("t");
  if (m & kAttrCat) add("c");
  return out;
}

std::uint32_t position_value(std::uint64_t hkey, std::uint32_t fkey, int pos) {
  if (pos == kPrev2) return static_cast<std::uint32_t>(hkey >> 27) & kProjMask;
  if (pos == kPrev1) return static_cast<std::uint32_t>(hkey) & kProjMask;
  return fkey;
}

std::string rel_value_name(std::uint32_t r) {
  if (r == kBoundaryRel) return kBoundarySym;
  return std::string(rel_symbol(static_cast<Rel>(r)));
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

int FeaturePattern::order() const {
  if (mask[kPrev2]) return 3;
  if (mask[kPrev1]) return 2;
  return 1;
}

std::string pattern_to_string(const FeaturePattern& p) {
  return position_to_string(p.mask[0]) + " | " + position_to_string(p.mask[1]) + " | " +
         position_to_string(p.mask[2]);
}

FeaturePattern parse_pattern(const std::string& line, int id) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, '|')) fields.push_back(f);
  if (fields.empty() || fields.size() > 3)
    throw std::invalid_argument("pattern needs 1 to 3 positions: '" + line + "'");
  FeaturePattern p;
  p.id = id;
  // Fewer than three fields are right-aligned: the last one is the future.
  const std::size_t offset = 3 - fields.size();
  for (std::size_t i = 0; i < fields.size(); ++i) p.mask[offset + i] = parse_position(fields[i], line);
  if (p.mask[kFuture] == 0) throw std::invalid_argument("pattern without future position: '" + line + "'");
  return p;
}

std::vector<FeaturePattern> read_patterns(std::istream& in, const std::string& name) {
  std::vector<FeaturePattern> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_pattern(line, static_cast<int>(out.size()) + 1));
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, lineno, e.what());
    }
  }
  if (out.empty()) throw ParseError(name, lineno, "no feature patterns");
  return out;
}

std::vector<FeaturePattern> load_patterns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pattern file " + path.string());
  return read_patterns(in, path.string());
}

std::vector<FeaturePattern> default_patterns() {
  return load_patterns(default_data_dir() / "patterns.txt");
}

SymbolTable::SymbolTable() {
  tags_ = {kBoundarySym, kUnknownSym};
  cats_ = {kBoundarySym, kUnknownSym};
}

namespace {
std::uint16_t intern_into(std::vector<std::string>& names,
                          std::unordered_map<std::string, std::uint16_t>& ids,
                          const std::string& s) {
  if (s == kBoundarySym || s == kUnknownSym)
    throw std::invalid_argument("reserved symbol '" + s + "'");
  if (auto it = ids.find(s); it != ids.end()) return it->second;
  if (names.size() >= kMaxSymbols)
    throw std::length_error("symbol table full (" + std::to_string(kMaxSymbols) + ")");
  const auto id = static_cast<std::uint16_t>(names.size());
  names.push_back(s);
  ids.emplace(s, id);
  return id;
}
}  // namespace

std::uint16_t SymbolTable::intern_tag(const std::string& s) { return intern_into(tags_, tag_ids_, s); }
std::uint16_t SymbolTable::intern_cat(const std::string& s) { return intern_into(cats_, cat_ids_, s); }

std::uint16_t SymbolTable::tag_id(const std::string& s) const {
  if (s == kBoundarySym) return kBoundaryId;
  auto it = tag_ids_.find(s);
  return it == tag_ids_.end() ? kUnknownId : it->second;
}

std::uint16_t SymbolTable::cat_id(const std::string& s) const {
  if (s == kBoundarySym) return kBoundaryId;
  auto it = cat_ids_.find(s);
  return it == cat_ids_.end() ? kUnknownId : it->second;
}

StateCode SymbolTable::intern(const StructuralTag& s) {
  return StateCode{intern_tag(s.tag), intern_cat(s.cat), static_cast<std::uint8_t>(s.rel)};
}

StateCode SymbolTable::code(const StructuralTag& s) const {
  return StateCode{tag_id(s.tag), cat_id(s.cat), static_cast<std::uint8_t>(s.rel)};
}

StructuralTag SymbolTable::decode(StateCode c) const {
  return StructuralTag{tag_name(c.tag), static_cast<Rel>(c.rel == kBoundaryRel ? 6 : c.rel),
                       cat_name(c.cat)};
}

int rel_sibl(Rel r) { return r == Rel::Same ? 1 : 0; }
int rel_sibl(const StructuralTag& s) { return rel_sibl(s.rel); }

std::uint32_t project(StateCode c, std::uint8_t mask) {
  std::uint32_t r = 0;
  if (mask & kAttrRel) r = c.rel;
  if (mask & kAttrRelSibl) r = c.rel == kBoundaryRel ? 2u : (c.rel == 0 ? 1u : 0u);
  const std::uint32_t t = (mask & kAttrTag) ? c.tag : 0u;
  const std::uint32_t k = (mask & kAttrCat) ? c.cat : 0u;
  return r | (t << 3) | (k << 15);
}

std::uint64_t history_key(const FeaturePattern& p, StateCode prev2, StateCode prev1) {
  return (std::uint64_t{project(prev2, p.mask[kPrev2])} << 27) | project(prev1, p.mask[kPrev1]);
}

bool is_active(const FeaturePattern& p, const FeatureInstance& f, const ContextTriple& ctx) {
  return project(ctx.future, p.mask[kFuture]) == f.fkey &&
         project(ctx.prev1, p.mask[kPrev1]) == position_value(f.hkey, f.fkey, kPrev1) &&
         project(ctx.prev2, p.mask[kPrev2]) == position_value(f.hkey, f.fkey, kPrev2);
}

std::vector<std::string> instance_values(const FeaturePattern& p, const FeatureInstance& f,
                                         const SymbolTable& symbols) {
  std::vector<std::string> out;
  for (int pos = 0; pos < 3; ++pos) {
    const std::uint8_t m = p.mask[pos];
    const std::uint32_t v = position_value(f.hkey, f.fkey, pos);
    const std::uint32_t r = v & 7u;
    const auto t = static_cast<std::uint16_t>((v >> 3) & 0xfffu);
    const auto c = static_cast<std::uint16_t>((v >> 15) & 0xfffu);
    if (m & kAttrRel) out.push_back(rel_value_name(r));
    if (m & kAttrRelSibl) out.push_back(r == 2 ? kBoundarySym : std::to_string(r));
    if (m & kAttrTag) out.push_back(symbols.tag_name(t));
    if (m & kAttrCat) out.push_back(symbols.cat_name(c));
  }
  return out;
}

FeatureInstance instance_from_values(const std::vector<FeaturePattern>& patterns, int pattern,
                                     const std::vector<std::string>& values,
                                     const SymbolTable& symbols) {
  if (pattern < 0 || pattern >= static_cast<int>(patterns.size()))
    throw std::invalid_argument("feature references unknown pattern " + std::to_string(pattern + 1));
  const FeaturePattern& p = patterns[pattern];
  std::size_t k = 0;
  auto take = [&]() -> const std::string& {
    if (k >= values.size())
      throw std::invalid_argument("too few values for pattern " + std::to_string(p.id));
    return values[k++];
  };
  std::array<std::uint32_t, 3> proj{};
  for (int pos = 0; pos < 3; ++pos) {
    const std::uint8_t m = p.mask[pos];
    std::uint32_t r = 0, t = 0, c = 0;
    if (m & kAttrRel) {
      const std::string& s = take();
      if (s == kBoundarySym) r = kBoundaryRel;
      else if (auto rel = parse_rel(s)) r = static_cast<std::uint32_t>(*rel);
      else throw std::invalid_argument("bad REL value '" + s + "'");
    }
    if (m & kAttrRelSibl) {
      const std::string& s = take();
      if (s == kBoundarySym) r = 2;
      else if (s == "0" || s == "1") r = static_cast<std::uint32_t>(s[0] - '0');
      else throw std::invalid_argument("bad r~sibl value '" + s + "'");
    }
    if (m & kAttrTag) {
      const std::string& s = take();
      t = symbols.tag_id(s);
      if (t == kUnknownId) throw std::invalid_argument("unknown tag '" + s + "' in feature");
    }
    if (m & kAttrCat) {
      const std::string& s = take();
      c = symbols.cat_id(s);
      if (c == kUnknownId) throw std::invalid_argument("unknown category '" + s + "' in feature");
    }
    proj[pos] = r | (t << 3) | (c << 15);
  }
  if (k != values.size())
    throw std::invalid_argument("too many values for pattern " + std::to_string(p.id));
  FeatureInstance f;
  f.pattern = pattern;
  f.hkey = (std::uint64_t{proj[0]} << 27) | proj[1];
  f.fkey = proj[2];
  return f;
}

std::vector<ContextTriple> contexts(const std::vector<StateCode>& seq) {
  std::vector<ContextTriple> out;
  out.reserve(seq.size());
  StateCode p2 = kBoundary, p1 = kBoundary;
  for (const auto& s : seq) {
    out.push_back(ContextTriple{p2, p1, s});
    p2 = p1;
    p1 = s;
  }
  return out;
}

std::size_t FeatureSet::KeyHash::operator()(const Key& k) const noexcept {
  return static_cast<std::size_t>(mix(k.h ^ mix(k.f)));
}

FeatureSet::FeatureSet(std::vector<FeaturePattern> patterns, std::vector<FeatureInstance> instances)
    : patterns_(std::move(patterns)), instances_(std::move(instances)), index_(patterns_.size()) {
  for (int id = 0; id < static_cast<int>(instances_.size()); ++id) {
    const auto& f = instances_[id];
    if (f.pattern < 0 || f.pattern >= static_cast<int>(patterns_.size()))
      throw std::invalid_argument("feature instance with unknown pattern");
    if (!index_[f.pattern].emplace(Key{f.hkey, f.fkey}, id).second)
      throw std::invalid_argument("duplicate feature instance");
  }
}

int FeatureSet::find(int pattern, std::uint64_t hkey, std::uint32_t fkey) const {
  const auto& m = index_[pattern];
  auto it = m.find(Key{hkey, fkey});
  return it == m.end() ? -1 : it->second;
}

std::vector<int> FeatureSet::active_set(const ContextTriple& ctx) const {
  std::vector<int> out;
  for (int p = 0; p < static_cast<int>(patterns_.size()); ++p) {
    const int id = find(p, history_key(patterns_[p], ctx.prev2, ctx.prev1),
                        future_key(patterns_[p], ctx.future));
    if (id >= 0) out.push_back(id);
  }
  return out;
}

FeatureSet extract_features(const std::vector<std::vector<StateCode>>& corpus,
                            const std::vector<FeaturePattern>& patterns, int cutoff) {
  if (patterns.empty()) throw std::invalid_argument("extract_features: no patterns");
  std::vector<std::map<std::pair<std::uint64_t, std::uint32_t>, int>> counts(patterns.size());
  for (const auto& seq : corpus)
    for (const auto& ctx : contexts(seq))
      for (std::size_t p = 0; p < patterns.size(); ++p)
        ++counts[p][{history_key(patterns[p], ctx.prev2, ctx.prev1),
                     future_key(patterns[p], ctx.future)}];
  std::vector<FeatureInstance> inst;
  for (std::size_t p = 0; p < patterns.size(); ++p)
    for (const auto& [key, n] : counts[p])
      if (n >= cutoff) inst.push_back(FeatureInstance{static_cast<int>(p), key.first, key.second, n});
  return FeatureSet(patterns, std::move(inst));
}

}  // namespace stag
