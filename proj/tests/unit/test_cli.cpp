#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "pmoe/cli.hpp"
#include "pmoe/data_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pmoe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = pmoe::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

// "key: value" lines to a map.
std::map<std::string, std::string> fields(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto pos = line.find(": ");
    if (pos != std::string::npos) m[line.substr(0, pos)] = line.substr(pos + 2);
  }
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / "pmoe_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string at(const std::string& name) const { return (dir / name).string(); }
};

void synth(const Workspace& ws) {
  const Run r = run({"synth", "--out-data", ws.at("d.csv"), "--out-rules", ws.at("r.txt"), "--regime", "A",
                     "--n", "600", "--d", "3", "--seed", "5"});
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    const Run help = run({"train", "--help"});
    CHECK(help.code == pmoe::kExitOk);
    CHECK(help.out.find("--gamma") != std::string::npos);
    CHECK(help.out.find("0.1") != std::string::npos);

    CHECK(run({"train", "--bogus"}).code == pmoe::kExitUsage);
    CHECK(run({"evaluate"}).code == pmoe::kExitUsage);
    CHECK(run({}).code == pmoe::kExitUsage);
  }

  TEST_CASE("train then evaluate reproduces the reported numbers") {
    Workspace ws;
    synth(ws);
    const Run tr = run({"train", "--data", ws.at("d.csv"), "--rules", ws.at("r.txt"), "--out", ws.at("m.txt"),
                        "--solver", "log-barrier", "--max-iters", "200", "--seed", "3"});
    REQUIRE(tr.code == 0);
    const auto t = fields(tr.out);
    CHECK(fs::exists(ws.at("m.txt.report.csv")));
    CHECK(fs::exists(ws.at("m.txt.warm")));

    const Run ev = run({"evaluate", "--model", ws.at("m.txt"), "--data", ws.at("d.csv"), "--rules",
                        ws.at("r.txt"), "--split", "0.7,0.15,0.15", "--seed", "3", "--part", "val"});
    REQUIRE(ev.code == 0);
    const auto e = fields(ev.out);
    CHECK(std::stod(e.at("auc")) == doctest::Approx(std::stod(t.at("val_auc"))).epsilon(1e-9));

    const Run evt = run({"evaluate", "--model", ws.at("m.txt"), "--data", ws.at("d.csv"), "--rules",
                         ws.at("r.txt"), "--split", "0.7,0.15,0.15", "--seed", "3", "--part", "train"});
    REQUIRE(evt.code == 0);
    CHECK(std::stod(fields(evt.out).at("loss")) ==
          doctest::Approx(std::stod(t.at("train_loss"))).epsilon(1e-9));

    // Baselines.
    const Run human = run({"evaluate", "--model", ws.at("m.txt"), "--data", ws.at("d.csv"), "--rules",
                           ws.at("r.txt"), "--baseline", "human-only"});
    CHECK(fields(human.out).at("hard_coverage") == "100.000000000000");
    const Run ml = run({"evaluate", "--model", ws.at("m.txt"), "--data", ws.at("d.csv"), "--rules",
                        ws.at("r.txt"), "--baseline", "ml-only"});
    CHECK(fields(ml.out).at("soft_coverage") == "0.000000000000");
    const Run std_moe = run({"evaluate", "--model", ws.at("m.txt"), "--data", ws.at("d.csv"), "--rules",
                             ws.at("r.txt"), "--baseline", "standard-moe"});
    CHECK(std_moe.code == 0);
    CHECK(fields(std_moe.out).at("baseline") == "standard-moe");

    // Constrained run from the saved warm start.
    const Run pg = run({"train", "--data", ws.at("d.csv"), "--rules", ws.at("r.txt"), "--out", ws.at("p.txt"),
                        "--solver", "projected-gradient", "--max-iters", "5", "--seed", "3", "--warm",
                        ws.at("m.txt.warm")});
    CHECK(pg.code == 0);
  }

  TEST_CASE("outputs are byte identical across runs") {
    Workspace ws;
    synth(ws);
    const std::vector<std::string> args = {"train", "--data", ws.at("d.csv"), "--rules", ws.at("r.txt"),
                                           "--max-iters", "100", "--seed", "9", "--out"};
    auto a = args, b = args;
    a.push_back(ws.at("a.txt"));
    b.push_back(ws.at("b.txt"));
    const Run ra = run(a), rb = run(b);
    CHECK(ra.out == rb.out);
    CHECK(slurp(ws.at("a.txt")) == slurp(ws.at("b.txt")));
    CHECK(slurp(ws.at("a.txt.report.csv")) == slurp(ws.at("b.txt.report.csv")));

    const Run c1 = run({"curve", "--model", ws.at("a.txt"), "--data", ws.at("d.csv"), "--rules", ws.at("r.txt")});
    const Run c2 = run({"curve", "--model", ws.at("a.txt"), "--data", ws.at("d.csv"), "--rules", ws.at("r.txt")});
    CHECK(c1.out == c2.out);
    CHECK(std::count(c1.out.begin(), c1.out.end(), '\n') == 1 + 101 * 101);
    const Run fr = run({"curve", "--model", ws.at("a.txt"), "--data", ws.at("d.csv"), "--rules", ws.at("r.txt"),
                        "--frontier", "--grid-points", "11"});
    CHECK(std::count(fr.out.begin(), fr.out.end(), '\n') == 1 + 11);
  }

  TEST_CASE("gating report") {
    Workspace ws;
    pmoe::MoEModel zero = pmoe::MoEModel::zeros(3);
    pmoe::save_model(zero, fs::path(ws.at("z.txt")));
    const Run rz = run({"gating-report", "--model", ws.at("z.txt")});
    CHECK(rz.code == 0);
    CHECK(rz.out.find("notice") != std::string::npos);

    pmoe::MoEModel m = pmoe::MoEModel::zeros(4);
    m.columns = {"a", "b", "c", "d"};
    m.w << 0.5, -2.0, 0.1, 1.0, 9.0;
    pmoe::save_model(m, fs::path(ws.at("m.txt")));
    const Run r = run({"gating-report", "--model", ws.at("m.txt"), "--top-k", "3"});
    CHECK(r.out == "rank,feature,weight\n1,b,-2.000000\n2,d,1.000000\n3,a,0.500000\n");
  }

  TEST_CASE("schema mismatch and infeasible warm start") {
    Workspace ws;
    synth(ws);
    {
      std::ofstream rules(ws.at("bad.txt"));
      rules << "rule r : if nothere > 0 then predict 1\n";
    }
    const Run bad = run({"train", "--data", ws.at("d.csv"), "--rules", ws.at("bad.txt"), "--out", ws.at("m.txt")});
    CHECK(bad.code == pmoe::kExitUsage);
    CHECK(bad.err.find("error [") != std::string::npos);

    REQUIRE(run({"train", "--data", ws.at("d.csv"), "--rules", ws.at("r.txt"), "--out", ws.at("m.txt"),
                 "--max-iters", "50"})
                .code == 0);
    pmoe::MoEModel warm = pmoe::load_model(fs::path(ws.at("m.txt")));
    warm.reference_loss = *warm.reference_loss * 0.5;
    pmoe::save_model(warm, fs::path(ws.at("w.txt")));
    const Run inf = run({"train", "--data", ws.at("d.csv"), "--rules", ws.at("r.txt"), "--out", ws.at("x.txt"),
                         "--solver", "log-barrier", "--warm", ws.at("w.txt")});
    CHECK(inf.code == pmoe::kExitInfeasibleInit);

    pmoe::MoEModel other = pmoe::MoEModel::zeros(5);
    pmoe::save_model(other, fs::path(ws.at("o.txt")));
    CHECK(run({"evaluate", "--model", ws.at("o.txt"), "--data", ws.at("d.csv"), "--rules", ws.at("r.txt")}).code ==
          pmoe::kExitUsage);
  }

  TEST_CASE("diagnose and rule report") {
    Workspace ws;
    const Run s = run({"synth", "--out-data", ws.at("d.csv"), "--out-rules", ws.at("r.txt"), "--n", "30", "--d",
                       "2", "--seed", "1"});
    REQUIRE(s.code == 0);
    REQUIRE(run({"train", "--data", ws.at("d.csv"), "--rules", ws.at("r.txt"), "--out", ws.at("m.txt"),
                 "--split", "1,0,0", "--max-iters", "100"})
                .code == 0);
    const Run d = run({"diagnose", "--model", ws.at("m.txt"), "--data", ws.at("d.csv"), "--rules", ws.at("r.txt")});
    CHECK(d.code == 0);
    CHECK(d.out.find("[gradients]") != std::string::npos);
    CHECK(d.out.find("[monotonicity]") != std::string::npos);
    CHECK(d.out.find("[assumptions]") != std::string::npos);
    const Run rr = run({"rule-report", "--model", ws.at("m.txt"), "--data", ws.at("d.csv"), "--rules",
                        ws.at("r.txt")});
    CHECK(rr.code == 0);
    CHECK(rr.out.rfind("rule,applicable_rows", 0) == 0);
  }
}
