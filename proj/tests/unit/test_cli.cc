#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bagtag/corpus.h"
#include "bagtag/model_io.h"
#include "support.h"

using namespace bagtag;
using namespace bagtag::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

class Workspace {
 public:
  explicit Workspace(const std::string& name)
      : dir_(fs::temp_directory_path() / ("bagtag_cli_" + name)) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    PlantedFhmm planted(5);
    Rng rng(5);
    const auto columns = ColumnMap::parse("surface,gold");
    write_file(path("train.conll"), write_conll(planted.sample(40, rng, "a"), columns));
    write_file(path("test.conll"), write_conll(planted.sample(12, rng, "b"), columns));
    write_file(path("base.ini"),
               "[data]\ncolumns = surface,gold\n"
               "[features]\ntemplates = word,suffix,word-window,ne-window\nwindow = 1\n"
               "[trainer]\nmax_epochs = 15\n");
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Run run(const std::string& args) const {
    const std::string command = "cd '" + dir_.string() + "' && '" BAGTAG_CLI "' " + args +
                                " > stdout.txt 2> stderr.txt";
    const int status = std::system(command.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(path("stdout.txt"));
    r.err = read_file(path("stderr.txt"));
    return r;
  }

 private:
  fs::path dir_;
};

std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("train, tag and eval round trip") {
  Workspace ws("roundtrip");
  auto r = ws.run("train -c base.ini --train train.conll -o out/model.fhmm -s output.stats=out/stats.csv");
  REQUIRE(r.code == 0);
  CHECK(read_file(ws.path("out/model.fhmm")).rfind("bagtag-ensemble\t1\n", 0) == 0);
  CHECK(read_file(ws.path("out/stats.csv")).rfind("member,epoch,token_error_rate,updates\n", 0) == 0);

  r = ws.run("tag -c base.ini -m out/model.fhmm -i test.conll");
  REQUIRE(r.code == 0);
  const auto input = read_file(ws.path("test.conll"));
  CHECK(count_lines(r.out) == count_lines(input));
  std::istringstream lines(r.out);
  std::string first;
  std::getline(lines, first);
  CHECK(std::count(first.begin(), first.end(), '\t') == 2);

  r = ws.run("tag -c base.ini -m out/model.fhmm -i test.conll -s output.tagged=out/tagged.conll");
  REQUIRE(r.code == 0);
  CHECK(read_file(ws.path("out/tagged.conll")) == ws.run("tag -c base.ini -m out/model.fhmm -i test.conll").out);

  r = ws.run("eval -c base.ini -m out/model.fhmm -g test.conll --records");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("micro.f1=") != std::string::npos);
  r = ws.run("eval -c base.ini -m out/model.fhmm -g test.conll");
  CHECK(r.out.find("micro") != std::string::npos);
}

TEST_CASE("a single vt model is written in the plain model format") {
  Workspace ws("single");
  const auto r = ws.run("train -c base.ini --train train.conll -o m.fhmm -s ensemble.decoder=vt");
  REQUIRE(r.code == 0);
  CHECK(read_file(ws.path("m.fhmm")).rfind("bagtag-fhmm\t1\n", 0) == 0);
}

TEST_CASE("ensembles and pipelines train and tag") {
  Workspace ws("variants");
  auto r = ws.run("train -c base.ini --train train.conll -o e.ens -s ensemble.k=3");
  REQUIRE(r.code == 0);
  CHECK(ws.run("eval -c base.ini -m e.ens -g test.conll --records").code == 0);
  r = ws.run("train -c base.ini --train train.conll -o p.model -s pipeline.enabled=true "
             "-s pipeline.drop=G,T");
  REQUIRE(r.code == 0);
  CHECK(read_file(ws.path("p.model")).rfind("bagtag-pipeline\t1\n", 0) == 0);
  CHECK(ws.run("tag -c base.ini -m p.model -i test.conll").code == 0);
}

TEST_CASE("errors exit with status 1 and a message") {
  Workspace ws("errors");
  auto r = ws.run("train -c base.ini --train missing.conll -o m.fhmm");
  CHECK(r.code == 1);
  CHECK(r.err.rfind("bagtag: ", 0) == 0);

  r = ws.run("train -c base.ini --train train.conll -s trainer.nope=1");
  CHECK(r.code == 1);
  CHECK(r.err.find("trainer.nope") != std::string::npos);

  write_file(ws.path("ragged.conll"), "a O\nb O extra\n");
  r = ws.run("train -c base.ini --train ragged.conll");
  CHECK(r.code == 1);
  CHECK(r.err.find("line 2") != std::string::npos);
  CHECK(r.err.find("line 2: line 2") == std::string::npos);

  r = ws.run("tag -c base.ini -m nothing.fhmm -i test.conll");
  CHECK(r.code == 1);
  CHECK(ws.run("frobnicate").code != 0);
  CHECK(ws.run("serve -c base.ini").code == 1);
}

TEST_CASE("al-simulate grid writes eight byte-identical curves across reruns") {
  Workspace ws("grid");
  const std::string args =
      "al-simulate -c base.ini -s data.pool=train.conll -s data.test=test.conll "
      "-s active.grid=true -s active.initial=3 -s active.batch=2 -s active.rounds=3 "
      "-s ensemble.k=2 -s trainer.max_epochs=5 ";
  auto r = ws.run(args + "-s output.curve_dir=c1");
  REQUIRE(r.code == 0);
  REQUIRE(ws.run(args + "-s output.curve_dir=c2").code == 0);
  std::size_t csvs = 0;
  for (const auto& entry : fs::directory_iterator(ws.path("c1"))) {
    if (entry.path().extension() != ".csv") continue;
    ++csvs;
    const auto name = entry.path().filename().string();
    const auto a = read_file(entry.path().string());
    CHECK(a == read_file(ws.path("c2/" + name)));
    CHECK(count_lines(a) == 5);
  }
  CHECK(csvs == 8);
  CHECK(fs::exists(ws.path("c1/bp-rw-utl.csv")));
  CHECK(fs::exists(ws.path("c1/vt-nrw-rnd.csv")));
  CHECK(read_file(ws.path("c1/bp_vs_vt.txt")) == r.out);

  r = ws.run(args + "-s output.curve_dir=c3 -s active.seeds=1,2 -s active.grid=false");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(ws.path("c3/seed1/bp-rw-utl.csv")));
  CHECK(fs::exists(ws.path("c3/seed2/bp-rw-utl.csv")));
}

TEST_CASE("al-simulate holds out a split when no test file is given") {
  Workspace ws("split");
  const auto r = ws.run(
      "al-simulate -c base.ini -s data.train=train.conll -s active.rounds=1 -s ensemble.k=2 "
      "-s trainer.max_epochs=3 -s output.curve_dir=c");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(ws.path("c/bp-rw-utl.csv")));
}
