#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <fstream>
#include <regex>
#include <thread>

#include "stag/annotation.hpp"
#include "support.hpp"

using namespace stag;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path& toy_model() {
  static const fs::path p = [] {
    const auto dir = testing::scratch_dir("server-model");
    const Corpus c = load_corpus(testing::data_file("toy_chunks.trees"), Format::Bracketed, default_vocabulary());
    TrainConfig cfg;
    Tagger::train(encode_all(prepare(c, Mode::Treebank, default_chunk_categories()).sentences), cfg)
        .save(dir / "toy.model");
    return dir / "toy.model";
  }();
  return p;
}

const fs::path& sentence_model() {
  static const fs::path p = [] {
    const auto dir = testing::scratch_dir("server-sentences");
    const Corpus c = load_corpus(testing::data_file("toy_sentences.trees"), Format::Bracketed, default_vocabulary());
    TrainConfig cfg;
    cfg.iis.max_iterations = 60;
    Tagger::train(encode_all(prepare(c, Mode::Chunking, default_chunk_categories()).sentences), cfg)
        .save(dir / "s.model");
    return dir / "s.model";
  }();
  return p;
}

json body(const ApiResponse& r) { return json::parse(r.body); }

}  // namespace

TEST_CASE("span proposals") {
  const AnnotationService svc(Tagger::load(toy_model()), "toy");
  const ApiResponse r = svc.parse_span(R"j({"pos": ["APPR", "ART", "NN"], "words": ["mit", "der", "Zeit"]})j");
  REQUIRE(r.status == 200);
  const json j = body(r);
  CHECK(j["tree"] == "(PP (APPR mit) (NP (ART der) (NN Zeit)))");
  CHECK(j["mode"] == "span");
  REQUIRE(j["tags"].size() == 3);
  CHECK(j["tags"][0] == json{{"tag", "APPR"}, {"rel", "1"}, {"cat", "PP"}});
  CHECK(j["tags"][1]["rel"] == "-");
  CHECK(j["unknown"].empty());
  CHECK(j["repairs"].empty());
  CHECK(j["score"].is_number());
  CHECK(svc.parse_span(R"j({"pos": ["APPR", "ART", "NN"]})j").body ==
        svc.parse_span(R"j({"pos": ["APPR", "ART", "NN"]})j").body);

  const json u = body(svc.parse_span(R"j({"pos": ["ART", "FOO", "NN"]})j"));
  CHECK(u["unknown"] == json::array({1}));
}

TEST_CASE("malformed requests are client errors") {
  const AnnotationService svc(Tagger::load(toy_model()), "toy");
  for (const char* bad : {R"j({"pos": []})j", R"j({})j", "not json", R"j({"pos": "ART"})j", R"j({"pos": [1, 2]})j",
                          R"j({"pos": ["ART"], "words": ["a", "b"]})j", R"j({"pos": ["ART"], "mode": "page"})j"}) {
    const ApiResponse r = svc.parse_span(bad);
    CHECK_MESSAGE(r.status == 400, bad);
    CHECK(body(r).contains("error"));
  }
}

TEST_CASE("sentence mode lists chunks and outside tokens") {
  const AnnotationService svc(Tagger::load(sentence_model()), "sentences");
  const json j = body(svc.chunk(R"j({"pos": ["ART", "NN", "VVFIN", "APPR", "ART", "NN", "$."]})j"));
  CHECK(j["mode"] == "sentence");
  CHECK(j["tree"] == "(NP (ART) (NN)) (VVFIN) (PP (APPR) (NP (ART) (NN))) ($.)");
  CHECK(j["chunks"] == json::array({{{"cat", "NP"}, {"first", 0}, {"last", 1}},
                                    {{"cat", "PP"}, {"first", 3}, {"last", 5}}}));
  CHECK(j["outside"] == json::array({2, 6}));
}

TEST_CASE("model description") {
  const AnnotationService svc(Tagger::load(toy_model()), "toy");
  const json j = body(svc.model_info());
  CHECK(j["model"] == "toy");
  CHECK(j["source"] == "maxent");
  CHECK(j["iterations"] == 3);
  CHECK(j["cutoff"] == 1);
  CHECK(j["writable"] == false);
  CHECK(j["labels"] == json::array({"NP", "PP"}));
  std::ifstream in(toy_model());
  std::string text((std::istreambuf_iterator<char>(in)), {});
  std::smatch m;
  REQUIRE(std::regex_search(text, m, std::regex("\nfeatures (\\d+)\n")));
  CHECK(j["features"] == std::stol(m[1]));
}

TEST_CASE("saving annotations") {
  const auto dir = testing::scratch_dir("server-save");
  AnnotationService closed(Tagger::load(toy_model()), "toy");
  CHECK(closed.save(R"j({"tree": "(NP (ART der) (NN Mann))"})j").status == 403);

  AnnotationService open(Tagger::load(toy_model()), "toy", dir / "out.tsv");
  CHECK(body(open.model_info())["writable"] == true);
  CHECK(open.save(R"j({"tree": "(NP (ART der) (NN Mann))"})j").status == 200);
  CHECK(open.save(R"j({"tags": [{"word": "mit", "tag": "APPR", "rel": "1", "cat": "PP"},
                               {"word": "ihm", "tag": "PPER", "rel": "-", "cat": "NP"}]})j")
            .status == 200);
  CHECK(open.save(R"j({"tree": "(NP (ART der) (NN Mann)"})j").status == 400);
  CHECK(open.save(R"j({"tags": [{"tag": "ART", "rel": "?", "cat": "NP"}]})j").status == 400);

  // a second service appends without repeating the header
  AnnotationService again(Tagger::load(toy_model()), "toy", dir / "out.tsv");
  CHECK(again.save(R"j({"tree": "(PP (APPR in) (NP (ART der) (NN Stadt)))"})j").status == 200);

  const Corpus c = load_corpus(dir / "out.tsv", Format::Columnar, default_vocabulary());
  REQUIRE(c.sentences.size() == 3);
  CHECK(to_bracketed(c.sentences[0]) == "(NP (ART der) (NN Mann))");
  CHECK(to_bracketed(c.sentences[1]) == "(PP (APPR mit) (NP (PPER ihm)))");
  CHECK(to_bracketed(c.sentences[2]) == "(PP (APPR in) (NP (ART der) (NN Stadt)))");
  fs::remove_all(dir);
}

TEST_CASE("HTTP round trip") {
  AnnotationService svc(Tagger::load(toy_model()), "toy");
  httplib::Server server;
  mount_routes(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const std::string req = R"j({"pos": ["APPR", "ART", "NN"]})j";
  auto r = client.Post("/v1/parse-span", req, "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->body == svc.parse_span(req).body);
  CHECK(json::parse(r->body)["tree"] == "(PP (APPR) (NP (ART) (NN)))");

  r = client.Post("/v1/parse-span", R"j({"pos": []})j", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  r = client.Get("/v1/model");
  REQUIRE(r);
  CHECK(json::parse(r->body)["source"] == "maxent");
  r = client.Post("/v1/save", R"j({"tree": "(NP (NN x))"})j", "application/json");
  REQUIRE(r);
  CHECK(r->status == 403);
  r = client.Get("/v1/nothing");
  REQUIRE(r);
  CHECK(r->status == 404);

  server.stop();
  th.join();
}
