#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "rollnet/cli.hpp"
#include "rollnet/model_io.hpp"
#include "rollnet/pianoroll.hpp"
#include "test_util.hpp"

using namespace rollnet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_roll(const fs::path& path, const Frames& frames) {
  fs::create_directories(path.parent_path());
  PianoRoll roll;
  roll.frames = frames;
  write_midi_file(path, render_midi(roll, QuantizationSpec::for_file(480, GridConfig{})));
}

Frames chord_roll(std::initializer_list<int> columns, int steps) {
  Frames f = Frames::Zero(steps, kPianoKeys);
  for (int c : columns) f.col(c).setOnes();
  return f;
}

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args, const cli::GradientTamper& tamper = {}) {
  args.insert(args.begin(), "rollnet");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), {out, err}, tamper);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& exe, const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + exe + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// One piece of a held chord in train/ and test/, plus a small config.
struct Workspace {
  test_util::TempDir dir{"cli"};
  fs::path corpus = dir.path() / "corpus";
  fs::path config = dir.path() / "run.cfg";
  fs::path model = dir.path() / "chord.model";

  Workspace() {
    const Frames chord = chord_roll({39, 43, 46}, 12);
    write_roll(corpus / "train" / "chord.mid", chord);
    write_roll(corpus / "test" / "chord.mid", chord);
    std::ofstream(config) << "num_blocks = 4\nseed = 11\nmax_epochs = 300\ntarget_mse = 0.001\n";
  }
  std::string cfg() const { return config.string(); }
};

}  // namespace

TEST_CASE("train, evaluate and reconstruct a memorized piece") {
  Workspace ws;
  const Result trained = run_cli({"train", "--config", ws.cfg(), "--corpus", ws.corpus.string(),
                                  "--model", ws.model.string()});
  INFO(trained.err);
  REQUIRE(trained.code == cli::kExitOk);
  CHECK(trained.out.rfind("trained 1 piece(s) with rprop: epochs ", 0) == 0);
  CHECK(trained.out.find("(converged)") != std::string::npos);
  CHECK(load_model(ws.model).config().num_blocks == 4);
  const std::string history = slurp(ws.model.string() + ".history");
  CHECK(history.rfind("# epoch mse\n1 ", 0) == 0);

  const Result evaluated = run_cli({"evaluate", "--config", ws.cfg(), "--model", ws.model.string(),
                                    "--corpus", ws.corpus.string()});
  CHECK(evaluated.code == cli::kExitOk);
  CHECK(evaluated.out.find("Acc=100.00% F1=100.00%") != std::string::npos);
  CHECK(evaluated.out.find("chord") != std::string::npos);

  const fs::path rebuilt = ws.dir.path() / "rebuilt.mid";
  const Result rec = run_cli({"reconstruct", "--config", ws.cfg(), "--model", ws.model.string(),
                              "--midi", (ws.corpus / "train" / "chord.mid").string(), "--output",
                              rebuilt.string()});
  CHECK(rec.code == cli::kExitOk);
  CHECK(rec.out == "chord.mid: 12 frames, frame accuracy 100.00%\n");
  CHECK(load_roll(rebuilt, {}).frames == chord_roll({39, 43, 46}, 12));
}

TEST_CASE("evaluate reports the metrics module's numbers for both optimizers") {
  Workspace ws;
  std::mt19937_64 gen(4);
  write_roll(ws.corpus / "test" / "noise.mid", test_util::random_roll(gen, 9, 0.1).frames);
  for (const char* opt : {"rprop", "gd"}) {
    const fs::path model = ws.dir.path() / (std::string(opt) + ".model");
    REQUIRE(run_cli({"train", "--config", ws.cfg(), "--optimizer", opt, "--corpus",
                     ws.corpus.string(), "--model", model.string()})
                .code == 0);
    CHECK(load_model(model).config().rng_seed == 11);
    const Result r = run_cli({"evaluate", "--config", ws.cfg(), "--model", model.string(),
                              "--corpus", ws.corpus.string()});
    REQUIRE(r.code == 0);
    std::vector<std::string> w;
    const EvalReport report = evaluate(load_model(model), load_rolls(ws.corpus / "test", {}, w));
    char expected[64];
    std::snprintf(expected, sizeof expected, "Acc=%.2f%% F1=%.2f%%", 100 * report.frame_accuracy,
                  100 * report.macro_f1);
    CHECK(r.out.find(expected) != std::string::npos);
  }
}

TEST_CASE("training is deterministic and skips unreadable files") {
  Workspace ws;
  std::ofstream(ws.corpus / "train" / "broken.mid") << "MThd garbage";
  const fs::path a = ws.dir.path() / "a.model", b = ws.dir.path() / "b.model";
  const Result ra = run_cli({"train", "--config", ws.cfg(), "--corpus", ws.corpus.string(), "-o", a.string()});
  const Result rb = run_cli({"train", "--config", ws.cfg(), "--corpus", ws.corpus.string(), "-o", b.string()});
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(ra.err.find("warning: skipped") != std::string::npos);
  CHECK(ra.err.find("broken.mid") != std::string::npos);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a.string() + ".history") == slurp(b.string() + ".history"));

  const fs::path c = ws.dir.path() / "c.model";
  REQUIRE(run_cli({"train", "--config", ws.cfg(), "--seed", "12", "--corpus", ws.corpus.string(), "-o",
                   c.string(), "--history", (ws.dir.path() / "c.txt").string()})
              .code == 0);
  CHECK(slurp(a) != slurp(c));
  CHECK(fs::exists(ws.dir.path() / "c.txt"));
}

TEST_CASE("corpus from the environment") {
  Workspace ws;
  ::setenv(cli::kCorpusEnv, ws.corpus.string().c_str(), 1);
  const Result r = run_cli({"train", "--config", ws.cfg(), "-o", ws.model.string()});
  CHECK(r.code == 0);
  ::unsetenv(cli::kCorpusEnv);
  const Result missing = run_cli({"train", "--config", ws.cfg(), "-o", ws.model.string()});
  CHECK(missing.code == cli::kExitUsage);
  CHECK(missing.err.find(cli::kCorpusEnv) != std::string::npos);
}

TEST_CASE("generate") {
  Workspace ws;
  REQUIRE(run_cli({"train", "--config", ws.cfg(), "--corpus", ws.corpus.string(), "-o", ws.model.string()})
              .code == 0);
  std::mt19937_64 gen(21);
  const Frames seed = test_util::random_roll(gen, 6, 0.08).frames;
  const fs::path seed_path = ws.dir.path() / "seed.mid";
  write_roll(seed_path, seed);

  SUBCASE("zero steps round-trips the seed") {
    const fs::path out = ws.dir.path() / "out.mid";
    const Result r = run_cli({"generate", "--config", ws.cfg(), "--steps", "0", "-m", ws.model.string(),
                              "-i", seed_path.string(), "-o", out.string()});
    REQUIRE(r.code == 0);
    CHECK(load_roll(out, {}).frames == seed);
  }
  SUBCASE("deterministic continuation") {
    const fs::path a = ws.dir.path() / "a.mid", b = ws.dir.path() / "b.mid";
    for (const fs::path& p : {a, b})
      REQUIRE(run_cli({"generate", "--config", ws.cfg(), "--steps", "16", "-m", ws.model.string(), "-i",
                       seed_path.string(), "-o", p.string()})
                  .code == 0);
    CHECK(slurp(a) == slurp(b));
    const PianoRoll roll = load_roll(a, {});
    CHECK(roll.steps() == 22);
    CHECK(roll.frames.topRows(6) == seed);
  }
  SUBCASE("tampered model exits 3") {
    std::string bytes = slurp(ws.model);
    bytes[bytes.size() / 2] ^= 0x01;
    std::ofstream(ws.model, std::ios::binary | std::ios::trunc) << bytes;
    const Result r = run_cli({"generate", "--config", ws.cfg(), "-m", ws.model.string(), "-i",
                              seed_path.string(), "-o", (ws.dir.path() / "x.mid").string()});
    CHECK(r.code == cli::kExitCorruptModel);
    CHECK(r.err.find("checksum") != std::string::npos);
  }
  SUBCASE("wrong magic exits 3") {
    std::string bytes = slurp(ws.model);
    bytes[0] = 'Z';
    std::ofstream(ws.model, std::ios::binary | std::ios::trunc) << bytes;
    CHECK(run_cli({"generate", "-m", ws.model.string(), "-i", seed_path.string(), "-o",
                   (ws.dir.path() / "x.mid").string()})
              .code == cli::kExitCorruptModel);
  }
  SUBCASE("unreadable seed exits 1") {
    CHECK(run_cli({"generate", "--config", ws.cfg(), "-m", ws.model.string(), "-i",
                   (ws.dir.path() / "nope.mid").string(), "-o", (ws.dir.path() / "x.mid").string()})
              .code == cli::kExitUsage);
  }
}

TEST_CASE("usage and config errors exit 1") {
  Workspace ws;
  CHECK(run_cli({}).code == cli::kExitUsage);
  CHECK(run_cli({"fly"}).code == cli::kExitUsage);
  CHECK(run_cli({"train", "--corpus", ws.corpus.string()}).code == cli::kExitUsage);
  CHECK(run_cli({"gradcheck", "--optimizer", "adam"}).code == cli::kExitUsage);
  CHECK(run_cli({"gradcheck", "--threshold", "1.5"}).code == cli::kExitUsage);
  std::ofstream(ws.config, std::ios::trunc) << "hidden = 10\n";
  const Result bad = run_cli({"gradcheck", "--config", ws.cfg()});
  CHECK(bad.code == cli::kExitUsage);
  CHECK(bad.err.find("unknown key 'hidden'") != std::string::npos);
  CHECK(run_cli({"--help"}).code == cli::kExitOk);

  // Evaluate with no test split.
  fs::remove_all(ws.corpus / "test");
  std::ofstream(ws.config, std::ios::trunc) << "num_blocks = 4\nmax_epochs = 2\n";
  REQUIRE(run_cli({"train", "--config", ws.cfg(), "--corpus", ws.corpus.string(), "-o", ws.model.string()})
              .code == 0);
  const Result empty = run_cli({"evaluate", "--config", ws.cfg(), "-m", ws.model.string(), "--corpus",
                                ws.corpus.string()});
  CHECK(empty.code == cli::kExitUsage);
  CHECK(empty.err.find("test split is empty") != std::string::npos);
}

TEST_CASE("training divergence exits 2") {
  Workspace ws;
  std::ofstream(ws.config, std::ios::trunc)
      << "num_blocks = 4\nmax_epochs = 5\noptimizer = gd\ngd.learning_rate = 1e308\nloss_scale = 1e10\n";
  const Result r = run_cli({"train", "--config", ws.cfg(), "--corpus", ws.corpus.string(), "-o",
                            ws.model.string()});
  CHECK(r.code == cli::kExitNonFinite);
  CHECK(r.err.find("epoch") != std::string::npos);
}

TEST_CASE("gradcheck") {
  const Result ok = run_cli({"gradcheck"});
  CHECK(ok.code == cli::kExitOk);
  CHECK(ok.out.find("gradcheck: 96 parameters, max relative error ") == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);

  for (const char* seed : {"1", "2", "3", "99"}) CHECK(run_cli({"gradcheck", "--seed", seed}).code == 0);

  const Result broken = run_cli({"gradcheck"}, [](GradientSet& g) { g[5] += 1e-3; });
  CHECK(broken.code == cli::kExitGradcheck);
  CHECK(broken.out.find("at input.W[1,2]") != std::string::npos);
  CHECK(broken.out.find("FAIL") != std::string::npos);
}

TEST_CASE("executables") {
  test_util::TempDir dir("exe");
  CHECK(run_binary(ROLLNET_CLI_PATH, "gradcheck", dir.path() / "ok.log") == 0);
  CHECK(slurp(dir.path() / "ok.log").find("PASS") != std::string::npos);
  CHECK(run_binary(ROLLNET_FAULTY_CLI_PATH, "gradcheck", dir.path() / "bad.log") == 4);
  CHECK(slurp(dir.path() / "bad.log").find("input.W[0,0]") != std::string::npos);
  CHECK(run_binary(ROLLNET_CLI_PATH, "", dir.path() / "usage.log") == 1);
}
