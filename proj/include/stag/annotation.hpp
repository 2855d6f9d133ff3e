#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

#include "stag/pipeline.hpp"

namespace httplib {
class Server;
}

namespace stag {

// Status code and JSON body of one API call.
struct ApiResponse {
  int status = 200;
  std::string body;
};

// Request handling for the annotation HTTP API. The model is immutable, so
// every read endpoint can run concurrently; appends to the save file are
// serialised.
class AnnotationService {
 public:
  // `save_path` empty: the save endpoint is refused.
  AnnotationService(Tagger tagger, std::string model_name, std::optional<std::filesystem::path> save_path = {});

  // {"pos": [...], "words": [...]?, "mode": "span"|"sentence"?, "beam": n?}
  ApiResponse parse_span(const std::string& body) const;
  // Same request, always sentence mode.
  ApiResponse chunk(const std::string& body) const;
  ApiResponse model_info() const;
  // {"tree": "<bracketed>"} or {"tags": [{"word","tag","rel","cat"}...]}
  ApiResponse save(const std::string& body);

  const Tagger& tagger() const { return tagger_; }

 private:
  ApiResponse run(const std::string& body, std::optional<bool> sentence) const;

  Tagger tagger_;
  std::string model_name_;
  std::optional<std::filesystem::path> save_path_;
  std::mutex save_mutex_;
};

// Routes: POST /v1/parse-span, POST /v1/chunk, GET /v1/model, POST /v1/save.
void mount_routes(httplib::Server& server, AnnotationService& service);

}  // namespace stag
