#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "segagent/cli.hpp"
#include "segagent/mock_backends.hpp"

using namespace segagent;
using namespace segagent::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string mock(const fs::path& script) { return "mock:" + script.string(); }

}  // namespace

TEST_CASE("segment") {
  TempDir dir;
  write_ablation_fixture(dir.path());
  const std::string script = mock(dir / "script.json");
  const fs::path out1 = dir / "out1", out2 = dir / "out2";

  const Run a = cli({"--backend", script, "--out", out1.string(), "--debug", "segment",
                     (dir / "a_square.png").string(), "the red square"});
  CHECK(a.code == 0);
  CHECK(a.err.empty());
  REQUIRE(fs::exists(out1 / "mask.png"));
  CHECK(fs::exists(out1 / "trace.json"));
  CHECK(fs::exists(out1 / "timing.json"));
  CHECK(fs::exists(out1 / "som_0_selection.png"));
  CHECK(fs::exists(out1 / "som_1_refinement.png"));
  CHECK(load_mask(out1 / "mask.png") == rect_mask({100, 100}, {20, 20, 60, 60}));

  const Run b = cli({"--backend", script, "--out", out2.string(), "segment",
                     (dir / "a_square.png").string(), "the red square"});
  CHECK(b.code == 0);
  CHECK(slurp(out1 / "mask.png") == slurp(out2 / "mask.png"));
  CHECK(slurp(out1 / "trace.json") == slurp(out2 / "trace.json"));
  CHECK_FALSE(fs::exists(out2 / "som_0_selection.png"));

  const json trace = json::parse(slurp(out1 / "trace.json"));
  CHECK(trace["instruction"] == "the red square");
}

TEST_CASE("segment failures map to exit codes") {
  TempDir dir;
  write_ablation_fixture(dir.path());
  const std::string script = mock(dir / "script.json");

  const Run unreadable = cli({"--backend", script, "--out", (dir / "o").string(), "segment",
                              (dir / "missing.png").string(), "x"});
  CHECK(unreadable.code == 1);
  CHECK_FALSE(unreadable.err.empty());

  write_file(dir / "garbage.png", std::vector<std::uint8_t>{1, 2, 3, 4});
  CHECK(cli({"--backend", script, "--out", (dir / "o").string(), "segment",
             (dir / "garbage.png").string(), "x"})
            .code == 1);

  const Run all_fail = cli({"--backend", script, "--out", (dir / "o").string(), "segment",
                            (dir / "a_square.png").string(), "the invisible unicorn"});
  CHECK(all_fail.code == 2);
  CHECK(all_fail.err.find("AllCandidatesFailed") != std::string::npos);

  CHECK(cli({"--backend", mock(dir / "nope.json"), "segment", (dir / "a_square.png").string(), "x"})
            .code == 1);
  CHECK(cli({"--backend", "bogus", "segment", (dir / "a_square.png").string(), "x"}).code == 1);
  CHECK(cli({"--backend", script, "--nms-iou", "1.5", "segment", (dir / "a_square.png").string(), "x"})
            .code == 1);
  CHECK(cli({"--backend", script, "--aug", "scale:9", "segment", (dir / "a_square.png").string(), "x"})
            .code == 1);
}

TEST_CASE("live backend without endpoints is a config error") {
  unsetenv("SEG_AGENT_MLLM_URL");
  unsetenv("SEG_AGENT_SEG_URL");
  TempDir dir;
  write_ablation_fixture(dir.path());
  const Run r = cli({"--backend", "live", "--out", (dir / "o").string(), "segment",
                     (dir / "a_square.png").string(), "x"});
  CHECK(r.code == 1);
  // Unreachable endpoints are transport errors, also exit 1.
  const Run t = cli({"--backend", "live", "--mllm-url", "http://127.0.0.1:1", "--seg-url",
                     "http://127.0.0.1:1", "--timeout", "1", "--out", (dir / "o").string(), "segment",
                     (dir / "a_square.png").string(), "x"});
  CHECK(t.code == 1);
  CHECK(t.err.find("Transport") != std::string::npos);
}

TEST_CASE("argument errors") {
  CHECK(cli({"--frobnicate", "segment", "a.png", "x"}).code == 1);
  CHECK(cli({"segment"}).code == 1);
  CHECK(cli({}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"--workers", "0", "evaluate", "m.jsonl"}).code == 1);
}

TEST_CASE("evaluate") {
  TempDir dir;
  const fs::path manifest = write_ablation_fixture(dir.path());
  write_json(dir / "oracle.json",
             json{{"mllm", {{"default_reply", R"({"bbox":[0,0,10,10]})"}}}, {"segmenter", {{"kind", "oracle"}}}});

  SUBCASE("oracle segmenter prints 1.000") {
    const Run r = cli({"--backend", mock(dir / "oracle.json"), "--out", (dir / "o").string(),
                       "evaluate", manifest.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("1.000") != std::string::npos);
    const json report = json::parse(slurp(dir / "o" / "report.json"));
    CHECK(report["overall"]["giou"] == 1.0);
    CHECK(report["overall"]["ciou"] == 1.0);
    CHECK(fs::exists(dir / "o" / "report.txt"));
  }
  SUBCASE("bad manifest line") {
    std::ofstream(manifest, std::ios::app) << "{\"id\": oops}\n";
    const Run r = cli({"--backend", mock(dir / "oracle.json"), "--out", (dir / "o").string(),
                       "evaluate", manifest.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find(":4:") != std::string::npos);
  }
  SUBCASE("official split check") {
    const Run r = cli({"--backend", mock(dir / "oracle.json"), "--out", (dir / "o").string(),
                       "evaluate", "--official", manifest.string()});
    CHECK(r.code == 1);
  }
  SUBCASE("worker count leaves report.json unchanged") {
    const fs::path robust = write_robustness_fixture(dir.path());
    const std::string script = mock(dir / "script.json");
    const Run w1 = cli({"--backend", script, "--workers", "1", "--out", (dir / "w1").string(),
                        "evaluate", robust.string()});
    const Run w4 = cli({"--backend", script, "--workers", "4", "--debug", "--out",
                        (dir / "w4").string(), "evaluate", robust.string()});
    CHECK(w1.code == 0);
    CHECK(w4.code == 0);
    CHECK(slurp(dir / "w1" / "report.json") == slurp(dir / "w4" / "report.json"));
    CHECK(w1.out == w4.out);
    CHECK(fs::exists(dir / "w4" / "traces" / "a_square.json"));
    const json report = json::parse(slurp(dir / "w1" / "report.json"));
    CHECK(report["samples"][3]["id"] == "d_unfindable");
    CHECK(report["samples"][3]["iou"] == 0.0);
  }
}

TEST_CASE("ablate") {
  TempDir dir;
  const fs::path manifest = write_ablation_fixture(dir.path());
  const std::string script = mock(dir / "script.json");
  const Run a = cli({"--backend", script, "--out", (dir / "a").string(), "ablate", manifest.string()});
  const Run b = cli({"--backend", script, "--out", (dir / "b").string(), "--workers", "3", "ablate",
                     manifest.string()});
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(slurp(dir / "a" / "ablation.json") == slurp(dir / "b" / "ablation.json"));
  CHECK(slurp(dir / "a" / "ablation.txt") == a.out);

  const json abl = json::parse(slurp(dir / "a" / "ablation.json"));
  REQUIRE(abl["rows"].size() == 4);
  const double base = abl["rows"][0]["giou"]["overall"];
  const double gm_sm = abl["rows"][1]["giou"]["overall"];
  const double full = abl["rows"][3]["giou"]["overall"];
  CHECK(full >= gm_sm);
  CHECK(gm_sm >= base);
  CHECK(full > base);

  // Baseline row equals a plain evaluate with selection, refinement and
  // extra views off.
  const Run e = cli({"--backend", script, "--aug", "identity", "--no-selection", "--no-refinement",
                     "--out", (dir / "e").string(), "evaluate", manifest.string()});
  REQUIRE(e.code == 0);
  const json report = json::parse(slurp(dir / "e" / "report.json"));
  CHECK(abl["rows"][0]["report"] == report);
}

TEST_CASE("config file supplies defaults") {
  TempDir dir;
  const fs::path manifest = write_ablation_fixture(dir.path());
  std::ofstream(dir / "seg.toml") << "backend = \"" << mock(dir / "script.json") << "\"\n"
                                  << "aug = \"identity\"\n"
                                  << "no-selection = true\n"
                                  << "no-refinement = true\n"
                                  << "out = \"" << (dir / "c").string() << "\"\n";
  const Run c = cli({"--config", (dir / "seg.toml").string(), "evaluate", manifest.string()});
  REQUIRE(c.code == 0);
  const Run e = cli({"--backend", mock(dir / "script.json"), "--aug", "identity", "--no-selection",
                     "--no-refinement", "--out", (dir / "e").string(), "evaluate", manifest.string()});
  CHECK(slurp(dir / "c" / "report.json") == slurp(dir / "e" / "report.json"));

  std::ofstream(dir / "bad.toml") << "nms-iou = \"high\"\n";
  CHECK(cli({"--config", (dir / "bad.toml").string(), "evaluate", manifest.string()}).code == 1);
}

TEST_CASE("render-som") {
  TempDir dir;
  const fs::path img = dir / "base.png";
  write_file(img, encode_png(Image(ImageDims{100, 100})));
  const Run r = cli({"--out", (dir / "o").string(), "render-som", img.string(), "--box", "20,30,70,80"});
  REQUIRE(r.code == 0);
  const auto goldens = som_golden_fixtures();
  CHECK(load_image(dir / "o" / "som.png") == render_som(goldens[1].base, goldens[1].boxes));
  CHECK(cli({"--out", (dir / "o").string(), "render-som", img.string(), "--box", "1,2,3"}).code == 1);
}
