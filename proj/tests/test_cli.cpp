#include <doctest.h>
#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "stag/corpus_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli {
 public:
  Cli() : dir_(testing::scratch_dir("cli")) {}
  ~Cli() { fs::remove_all(dir_); }

  Run operator()(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" STAG_CLI "' " + args + " > out.txt 2> err.txt";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir_ / "out.txt"), slurp(dir_ / "err.txt")};
  }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
};

const std::string kToy = "'" + testing::data_file("toy_chunks.trees").string() + "'";
const std::string kSpans = "'" + testing::data_file("spans.pos").string() + "'";

}  // namespace

TEST_CASE("training is reproducible and records its settings") {
  Cli cli;
  REQUIRE(cli("train " + kToy + " -m a.model").code == 0);
  const Run r = cli("train " + kToy + " -m b.model");
  REQUIRE(r.code == 0);
  CHECK(slurp(cli / "a.model") == slurp(cli / "b.model"));
  CHECK(slurp(cli / "a.model").find("\niterations 3\n") != std::string::npos);
  CHECK(r.out.find("iteration 3 loglik") != std::string::npos);
  CHECK(r.out.find("iteration 4") == std::string::npos);

  const Run empty = cli("train " + kToy + " -m c.model --cutoff 100000");
  CHECK(empty.code == 0);
  CHECK(empty.err.find("warning") != std::string::npos);
  CHECK(empty.out.find("features 0\n") != std::string::npos);
}

TEST_CASE("parse writes valid trees deterministically") {
  Cli cli;
  REQUIRE(cli("train " + kToy + " -m toy.model --iterations 60").code == 0);
  const Run a = cli("parse -m toy.model " + kSpans + " --output-format bracketed");
  REQUIRE(a.code == 0);
  CHECK(a.out == cli("parse -m toy.model " + kSpans + " --output-format bracketed").out);
  std::istringstream in(a.out);
  const auto trees = stag::read_bracketed(in);
  REQUIRE(trees.size() == 3);
  for (const auto& t : trees) CHECK(stag::validate_tree(t).empty());
  CHECK(stag::to_bracketed(trees[0]) == "(PP (APPR mit) (NP (ART der) (NN Zeit)))");
  CHECK(stag::to_bracketed(trees[1]) == "(NP (ART der) (NN Mann))");

  // the default output is columnar with a header
  const Run col = cli("parse -m toy.model " + kSpans);
  CHECK(col.out.rfind(std::string(stag::kColumnarHeader), 0) == 0);

  const Run mismatch = cli("parse -m toy.model --source interpolation " + kSpans);
  CHECK(mismatch.code != 0);
  CHECK(mismatch.err.find("error") != std::string::npos);
}

TEST_CASE("evaluate, extract-chunks and cross-validation") {
  Cli cli;
  REQUIRE(cli("synth -n 400 --seed 2 -o s.trees").code == 0);

  const Run self = cli("evaluate s.trees --pred s.trees --mode chunking --report kv");
  REQUIRE(self.code == 0);
  CHECK(self.out.find("tags.accuracy=100.0\n") != std::string::npos);
  CHECK(self.out.find("bracketing.recall=100.0\n") != std::string::npos);
  CHECK(self.out.find("external.precision=100.0\n") != std::string::npos);

  const Run ex = cli("extract-chunks s.trees -o chunks.tsv");
  REQUIRE(ex.code == 0);
  const auto chunks = stag::load_corpus(cli / "chunks.tsv", stag::Format::Columnar, stag::default_vocabulary());
  CHECK(chunks.sentences.size() > 400);
  for (const auto& t : chunks.sentences) {
    REQUIRE(t.top.size() == 1);
    CHECK_FALSE(t.top[0].is_leaf());
  }

  const Run cv = cli("crossval s.trees --folds 10 --seed 1 --report kv --curve 100,200 --curve-prefix lc");
  REQUIRE(cv.code == 0);
  for (int f = 1; f <= 10; ++f)
    CHECK(cv.out.find("fold" + std::to_string(f) + ".tags.accuracy=") != std::string::npos);
  CHECK(cv.out.find("fold11.") == std::string::npos);
  CHECK(cv.out.find("seed=1") != std::string::npos);
  std::istringstream curve(slurp(cli / "lc.maxent.dat"));
  std::vector<std::string> rows;
  for (std::string line; std::getline(curve, line);)
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rfind("100", 0) == 0);
  CHECK(rows[1].rfind("200", 0) == 0);
}

TEST_CASE("bad invocations fail") {
  Cli cli;
  CHECK(cli("").code != 0);
  CHECK(cli("train missing.trees -m x.model").code != 0);
  CHECK(cli("train " + kToy + " -m x.model --iterations 0").code != 0);
  CHECK(cli("train " + kToy + " -m x.model --source nonsense").code != 0);
  CHECK(cli("crossval " + kToy + " --folds 1").code != 0);
  CHECK(cli("parse -m " + kToy + " " + kSpans).code != 0);  // not a model file
  std::ofstream(cli / "bad.trees") << "(NP (ART der) (NN Mann)\n";
  const Run r = cli("train bad.trees -m x.model");
  CHECK(r.code != 0);
  CHECK(r.err.find("bad.trees:1:") != std::string::npos);
}

TEST_CASE("flags override the config file") {
  Cli cli;
  std::ofstream(cli / "c.ini") << "[train]\niterations=5\ncutoff=2\n";
  REQUIRE(cli("--config c.ini train " + kToy + " -m a.model --iterations 2").code == 0);
  const std::string a = slurp(cli / "a.model");
  CHECK(a.find("\niterations 2\n") != std::string::npos);
  CHECK(a.find("\ncutoff 2\n") != std::string::npos);
  REQUIRE(cli("--config c.ini train " + kToy + " -m b.model").code == 0);
  CHECK(slurp(cli / "b.model").find("\niterations 5\n") != std::string::npos);
}
