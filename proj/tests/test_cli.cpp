// End-to-end checks of the installed command surface: exit codes, lenient
// mode, manifests and replay. Each case drives the real binary through
// std::system in a scratch directory.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const char* cli_path() { return SATDIFF_CLI_PATH; }

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() /
          ("satdiff_cli_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  static int counter() {
    static int n = 0;
    return n++;
  }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

}  // namespace

TEST_CASE("tokenize/detokenize round-trip a normalized corpus byte-exactly") {
  Scratch s;
  REQUIRE(run("generate --out " + s.file("lines.txt") + " --n 40 --seed 9") == 0);
  REQUIRE(run("tokenize --in " + s.file("lines.txt") + " --out " +
              s.file("sat.txt")) == 0);
  REQUIRE(run("detokenize --in " + s.file("sat.txt") + " --out " +
              s.file("back.txt")) == 0);
  CHECK(slurp(s.file("lines.txt")) == slurp(s.file("back.txt")));
  // and a second tokenize of the round-tripped corpus is byte-identical
  REQUIRE(run("tokenize --in " + s.file("back.txt") + " --out " +
              s.file("sat2.txt")) == 0);
  CHECK(slurp(s.file("sat.txt")) == slurp(s.file("sat2.txt")));
}

TEST_CASE("malformed lines: strict exit vs lenient skip") {
  Scratch s;
  spit(s.file("bad.txt"), "x+y\n\\frac{a}{b\nz\n");
  CHECK(run("tokenize --in " + s.file("bad.txt") + " --out " + s.file("out.txt")) ==
        1);
  CHECK(run("tokenize --lenient --in " + s.file("bad.txt") + " --out " +
            s.file("out.txt")) == 0);
  std::string out = slurp(s.file("out.txt"));
  CHECK(out == "x/_ +/_ y/_\nz/_\n");
}

TEST_CASE("missing channel file exits nonzero with a config error") {
  Scratch s;
  spit(s.file("sat.txt"), "x/_\n");
  CHECK(run("corrupt --in " + s.file("sat.txt") + " --out " + s.file("obs.txt") +
            " --channel " + s.file("nope.cfg")) == 2);
}

TEST_CASE("unknown flags are config errors") {
  CHECK(run("tokenize --unknown-flag") == 2);
  CHECK(run("") == 2);
}

TEST_CASE("corrupt with the identity channel copies its input") {
  Scratch s;
  spit(s.file("sat.txt"), "x/_ 2/SUP\na/FRAC_NUM b/FRAC_DEN\n");
  REQUIRE(run("corrupt --in " + s.file("sat.txt") + " --out " + s.file("obs.txt") +
              " --channel identity --seed 4") == 0);
  CHECK(slurp(s.file("obs.txt")) == slurp(s.file("sat.txt")));
}

TEST_CASE("corrupt is reproducible for a fixed seed") {
  Scratch s;
  REQUIRE(run("generate --out " + s.file("lines.txt") + " --n 30 --seed 2") == 0);
  REQUIRE(run("tokenize --in " + s.file("lines.txt") + " --out " +
              s.file("sat.txt")) == 0);
  REQUIRE(run("corrupt --in " + s.file("sat.txt") + " --out " + s.file("a.txt") +
              " --channel preset --seed 12") == 0);
  REQUIRE(run("corrupt --in " + s.file("sat.txt") + " --out " + s.file("b.txt") +
              " --channel preset --seed 12") == 0);
  CHECK(slurp(s.file("a.txt")) == slurp(s.file("b.txt")));
}

TEST_CASE("oracle decode reaches EM 1 and manifests replay bitwise") {
  Scratch s;
  REQUIRE(run("generate --out " + s.file("lines.txt") +
              " --n 25 --seed 6 --max-sat-len 12") == 0);
  REQUIRE(run("tokenize --in " + s.file("lines.txt") + " --out " +
              s.file("sat.txt")) == 0);
  REQUIRE(run("corrupt --in " + s.file("sat.txt") + " --out " + s.file("obs.txt") +
              " --channel preset --seed 3") == 0);
  REQUIRE(run("decode --in " + s.file("obs.txt") + " --oracle " + s.file("sat.txt") +
              " --out " + s.file("hyps.txt") + " --steps 10 --seed 5") == 0);
  REQUIRE(run("eval --refs " + s.file("lines.txt") + " --hyps " + s.file("hyps.txt") +
              " --out " + s.file("report.txt")) == 0);
  std::string report = slurp(s.file("report.txt"));
  CHECK(report.find("em=1") != std::string::npos);
  CHECK(report.find("cer=0") != std::string::npos);

  // the decode manifest replays to a bitwise-identical artifact
  std::string first = slurp(s.file("hyps.txt"));
  REQUIRE(fs::exists(s.file("hyps.txt.manifest.json")));
  REQUIRE(run("replay --manifest " + s.file("hyps.txt.manifest.json")) == 0);
  CHECK(slurp(s.file("hyps.txt")) == first);
}

TEST_CASE("train writes checkpoint, log and manifest; decode trace counts steps") {
  Scratch s;
  REQUIRE(run("generate --out " + s.file("lines.txt") +
              " --n 30 --seed 8 --max-sat-len 12") == 0);
  REQUIRE(run("train --in " + s.file("lines.txt") + " --out " + s.file("model.ckpt") +
              " --channel preset --epochs 2 --dim 8 --canvas-len 14 --steps 3"
              " --rmml --seed 4") == 0);
  CHECK(fs::exists(s.file("model.ckpt")));
  CHECK(fs::exists(s.file("model.ckpt.log")));
  CHECK(fs::exists(s.file("model.ckpt.manifest.json")));
  CHECK(slurp(s.file("model.ckpt.manifest.json")).find("vocab_hash") !=
        std::string::npos);

  REQUIRE(run("tokenize --in " + s.file("lines.txt") + " --out " +
              s.file("sat.txt")) == 0);
  REQUIRE(run("corrupt --in " + s.file("sat.txt") + " --out " + s.file("obs.txt") +
              " --channel preset --seed 5") == 0);
  REQUIRE(run("decode --in " + s.file("obs.txt") + " --model " + s.file("model.ckpt") +
              " --out " + s.file("hyps.txt") + " --steps 4 --trace " +
              s.file("trace.txt")) == 0);
  std::string trace = slurp(s.file("trace.txt"));
  std::size_t lines = 0;
  for (char c : trace) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 30 * 4);  // T lines per expression

  // identical seeds give bitwise-identical checkpoints
  REQUIRE(run("train --in " + s.file("lines.txt") + " --out " + s.file("model2.ckpt") +
              " --channel preset --epochs 2 --dim 8 --canvas-len 14 --steps 3"
              " --rmml --seed 4") == 0);
  CHECK(slurp(s.file("model.ckpt")) == slurp(s.file("model2.ckpt")));
}

TEST_CASE("diversity histogram buckets sum to the input count") {
  Scratch s;
  REQUIRE(run("generate --out " + s.file("lines.txt") +
              " --n 12 --seed 13 --max-sat-len 10") == 0);
  REQUIRE(run("tokenize --in " + s.file("lines.txt") + " --out " +
              s.file("sat.txt")) == 0);
  REQUIRE(run("train --in " + s.file("lines.txt") + " --out " + s.file("m.ckpt") +
              " --channel preset --epochs 1 --dim 6 --canvas-len 12 --steps 2") == 0);
  REQUIRE(run("diversity --model " + s.file("m.ckpt") + " --in " + s.file("sat.txt") +
              " --runs 5 --steps 2 --policy random --out " + s.file("hist.txt")) ==
          0);
  std::istringstream in(slurp(s.file("hist.txt")));
  std::size_t bucket, count, total = 0, rows = 0;
  while (in >> bucket >> count) {
    total += count;
    ++rows;
  }
  CHECK(rows == 5);
  CHECK(total == 12);
}

TEST_CASE("eval --json emits one flat record") {
  Scratch s;
  spit(s.file("refs.txt"), "x+y\nab\n");
  spit(s.file("hyps.txt"), "x+y\nab\n");
  std::string cmd = std::string(cli_path()) + " eval --refs " + s.file("refs.txt") +
                    " --hyps " + s.file("hyps.txt") + " --json > " +
                    s.file("out.json") + " 2>/dev/null";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  std::string out = slurp(s.file("out.json"));
  CHECK(out.rfind("{", 0) == 0);
  CHECK(out.find("\"em\":1") != std::string::npos);
}
