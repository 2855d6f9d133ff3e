#include "stag/annotation.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace stag {

using nlohmann::json;

namespace {

ApiResponse error(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

struct RequestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json parse_body(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw RequestError("request body is not valid JSON");
  if (!j.is_object()) throw RequestError("request body must be a JSON object");
  return j;
}

json tag_json(const StructuralTag& t) {
  return {{"tag", t.tag}, {"rel", std::string(rel_symbol(t.rel))}, {"cat", t.cat}};
}

std::pair<int, int> top_span(const std::vector<std::pair<int, int>>& spans,
                             const ChildRef& c) {
  return c.is_leaf() ? std::pair{c.index, c.index} : spans[c.index];
}

}  // namespace

AnnotationService::AnnotationService(Tagger tagger, std::string model_name,
                                     std::optional<std::filesystem::path> save_path)
    : tagger_(std::move(tagger)), model_name_(std::move(model_name)), save_path_(std::move(save_path)) {}

ApiResponse AnnotationService::parse_span(const std::string& body) const { return run(body, std::nullopt); }

ApiResponse AnnotationService::chunk(const std::string& body) const { return run(body, true); }

ApiResponse AnnotationService::run(const std::string& body, std::optional<bool> sentence) const {
  try {
    const json req = parse_body(body);
    if (!req.contains("pos") || !req["pos"].is_array()) throw RequestError("field 'pos' must be a list of tags");
    const json& jpos = req["pos"];
    if (jpos.empty()) throw RequestError("empty span: 'pos' has no tags");
    std::vector<std::string> pos;
    for (const auto& p : jpos) {
      if (!p.is_string() || p.get<std::string>().empty()) throw RequestError("every POS tag must be a non-empty string");
      pos.push_back(p.get<std::string>());
    }
    std::vector<std::optional<std::string>> words;
    if (req.contains("words") && !req["words"].is_null()) {
      if (!req["words"].is_array() || req["words"].size() != pos.size())
        throw RequestError("'words' must be a list as long as 'pos'");
      for (const auto& w : req["words"]) {
        if (w.is_null()) words.emplace_back();
        else if (w.is_string()) words.emplace_back(w.get<std::string>());
        else throw RequestError("word forms must be strings or null");
      }
    }
    bool sentence_mode = sentence.value_or(false);
    if (!sentence && req.contains("mode")) {
      const json& m = req["mode"];
      if (m == "sentence") sentence_mode = true;
      else if (m != "span") throw RequestError("'mode' must be \"span\" or \"sentence\"");
    }
    DecodeOptions opt;
    if (req.contains("beam")) {
      if (!req["beam"].is_number_integer() || req["beam"].get<int>() < 0)
        throw RequestError("'beam' must be a non-negative integer");
      opt.beam = req["beam"].get<int>();
    }

    const ParseResult r = tagger_.parse(pos, words, opt);
    json out;
    out["mode"] = sentence_mode ? "sentence" : "span";
    out["tags"] = json::array();
    for (const auto& t : r.viterbi.tags) out["tags"].push_back(tag_json(t));
    out["tree"] = to_bracketed(r.decoded.tree);
    out["score"] = r.viterbi.score;
    out["candidates"] = r.viterbi.candidate_counts;
    out["unknown"] = json::array();
    for (std::size_t i = 0; i < pos.size(); ++i)
      if (!tagger_.inventory().knows(pos[i])) out["unknown"].push_back(i);
    out["repairs"] = json::array();
    for (const auto& rep : r.decoded.repairs)
      out["repairs"].push_back({{"kind", std::string(repair_name(rep.kind))},
                                {"position", rep.position},
                                {"original", std::string(rel_symbol(rep.original))},
                                {"applied", std::string(rel_symbol(rep.applied))}});
    if (sentence_mode) {
      const ChunkTree& t = r.decoded.tree;
      const auto spans = node_spans(t);
      out["chunks"] = json::array();
      out["outside"] = json::array();
      for (const auto& c : t.top) {
        const auto [first, last] = top_span(spans, c);
        if (c.is_leaf()) out["outside"].push_back(first);
        else out["chunks"].push_back({{"cat", t.nodes[c.index].cat}, {"first", first}, {"last", last}});
      }
    }
    return {200, out.dump()};
  } catch (const RequestError& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

ApiResponse AnnotationService::model_info() const {
  json out;
  out["model"] = model_name_;
  out["source"] = std::string(source_name(tagger_.kind()));
  out["tagset"] = tagger_.inventory().tags();
  std::set<std::string> labels;
  for (const auto& f : tagger_.inventory().futures())
    if (!f.out_of_chunk()) labels.insert(f.cat);
  out["labels"] = labels;
  out["states"] = tagger_.inventory().futures().size();
  if (const MaxentModel* m = tagger_.maxent()) {
    out["features"] = m->features().size();
    out["iterations"] = m->info.iterations;
    out["cutoff"] = m->info.cutoff;
  } else {
    out["features"] = nullptr;
    out["iterations"] = nullptr;
    const auto& w = tagger_.ngram()->weights;
    out["lambda"] = {w.l1, w.l2, w.l3};
  }
  out["writable"] = save_path_.has_value();
  return {200, out.dump()};
}

ApiResponse AnnotationService::save(const std::string& body) {
  if (!save_path_) return error(403, "saving is disabled; start the server with --allow-write");
  try {
    const json req = parse_body(body);
    TaggedSequence seq;
    if (req.contains("tree")) {
      if (!req["tree"].is_string()) throw RequestError("'tree' must be a bracketed string");
      std::istringstream in(req["tree"].get<std::string>());
      std::vector<ChunkTree> trees;
      try {
        trees = read_bracketed(in, "request");
      } catch (const std::exception& e) {
        throw RequestError(e.what());
      }
      if (trees.size() != 1) throw RequestError("'tree' must hold exactly one tree");
      if (const auto v = validate_tree(trees[0]); !v.empty()) throw RequestError("invalid tree: " + v[0].message);
      try {
        seq = to_tagged(trees[0]);
      } catch (const std::exception& e) {
        throw RequestError(e.what());
      }
    } else if (req.contains("tags") && req["tags"].is_array() && !req["tags"].empty()) {
      for (const auto& t : req["tags"]) {
        if (!t.is_object() || !t.contains("tag") || !t.contains("rel") || !t.contains("cat"))
          throw RequestError("each entry of 'tags' needs tag, rel and cat");
        TaggedToken tok;
        if (t.contains("word") && t["word"].is_string()) tok.word = t["word"].get<std::string>();
        tok.tag.tag = t["tag"].get<std::string>();
        const auto rel = parse_rel(t["rel"].get<std::string>());
        if (!rel) throw RequestError("unknown REL symbol");
        tok.tag.rel = *rel;
        tok.tag.cat = t["cat"].get<std::string>();
        seq.push_back(std::move(tok));
      }
    } else {
      throw RequestError("give either 'tree' or a non-empty 'tags' list");
    }

    std::ostringstream text;
    write_tagged(text, {seq});
    std::string chunk = text.str();
    std::lock_guard lock(save_mutex_);
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(*save_path_, ec) || std::filesystem::file_size(*save_path_, ec) == 0;
    if (!fresh) chunk.erase(0, chunk.find('\n') + 1);  // header only once
    std::ofstream out(*save_path_, std::ios::app | std::ios::binary);
    out << chunk;
    out.flush();
    if (!out) return error(500, "cannot append to " + save_path_->string());
    return {200, json{{"saved", seq.size()}}.dump()};
  } catch (const RequestError& e) {
    return error(400, e.what());
  } catch (const json::exception& e) {
    return error(400, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

void mount_routes(httplib::Server& server, AnnotationService& service) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json; charset=utf-8");
  };
  server.Post("/v1/parse-span", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.parse_span(req.body));
  });
  server.Post("/v1/chunk", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.chunk(req.body));
  });
  server.Get("/v1/model", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.model_info());
  });
  server.Post("/v1/save", [&service, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.save(req.body));
  });
}

}  // namespace stag
