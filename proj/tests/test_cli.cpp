#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "admgs/io.hpp"

using namespace admgs;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string cli() {
  const char* env = std::getenv("ADMGS_CLI");
  REQUIRE_MESSAGE(env != nullptr, "ADMGS_CLI must point at the admgs binary");
  return env;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() /
           (std::string("admgs_cli_") + tag + "_" +
            std::to_string(std::uintptr_t(this)));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str(const char* sub = nullptr) const {
    return sub ? (path / sub).string() : path.string();
  }
};

int run(const std::string& args, const std::string& capture = "") {
  std::string cmd = cli() + " " + args;
  if (!capture.empty()) cmd += " >" + capture + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// One shared dataset + short training run for all CLI tests.
struct CliFixture {
  TempDir dir{"fixture"};
  std::string dataset;
  std::string run_dir;
  std::string checkpoint;

  CliFixture() {
    dataset = dir.str("data");
    run_dir = dir.str("run");
    REQUIRE(run("gen-data --suite sanity-1splat --out " + dataset) == 0);
    REQUIRE(run("train " + dataset + " --out " + run_dir +
                " --train.iterations=40 --model.max_static_points=120 " +
                "--model.sky_count=48",
                dir.str("train.log")) == 0);
    checkpoint = run_dir + "/checkpoint.admg";
    REQUIRE(fs::exists(checkpoint));
  }
};

CliFixture& fixture() {
  static CliFixture fx;
  return fx;
}

}  // namespace

TEST_CASE("gen-data writes a dataset with a manifest") {
  CHECK(fs::exists(fs::path(fixture().dataset) / "manifest.json"));
  CHECK(fs::exists(fs::path(fixture().dataset) / "init_points.ply"));
}

TEST_CASE("gen-data with an unknown suite exits 2 and lists suites") {
  TempDir tmp("unknown_suite");
  const int rc = run("gen-data --suite not-a-suite --out " + tmp.str("x"),
                     tmp.str("out.txt"));
  CHECK(rc == 2);
  const std::string log = read_text_file(tmp.str("out.txt"));
  CHECK(log.find("sanity-1splat") != std::string::npos);
  CHECK(log.find("decomp-3trav") != std::string::npos);
}

TEST_CASE("gen-data is byte-deterministic for the same seed") {
  TempDir tmp("gen_det");
  REQUIRE(run("gen-data --suite sanity-1splat --out " + tmp.str("a")) == 0);
  REQUIRE(run("gen-data --suite sanity-1splat --out " + tmp.str("b")) == 0);
  for (const auto& entry :
       fs::recursive_directory_iterator(fs::path(tmp.str("a")))) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "run_meta.json") continue;  // echoes argv
    const auto rel = fs::relative(entry.path(), fs::path(tmp.str("a")));
    CHECK(read_binary_file(entry.path().string()) ==
          read_binary_file((fs::path(tmp.str("b")) / rel).string()));
  }
}

TEST_CASE("train run emits config echo, logs, and metadata") {
  const auto& fx = fixture();
  CHECK(fs::exists(fs::path(fx.run_dir) / "config.json"));
  CHECK(fs::exists(fs::path(fx.run_dir) / "train_log.jsonl"));
  CHECK(fs::exists(fs::path(fx.run_dir) / "run_meta.json"));
  const json meta = json::parse(read_text_file(fx.run_dir + "/run_meta.json"));
  CHECK(meta.contains("build_id"));
  CHECK(meta.at("config").at("train").at("iterations").get<int>() == 40);
}

TEST_CASE("dotted overrides reach the effective config") {
  TempDir tmp("override");
  REQUIRE(run("train " + fixture().dataset + " --out " + tmp.str("r") +
              " --train.iterations=3 --loss.lambda_decomp=0 " +
              "--model.max_static_points=60 --model.sky_count=32",
              tmp.str("log.txt")) == 0);
  const json cfg = json::parse(read_text_file(tmp.str("r") + "/config.json"));
  CHECK(cfg.at("loss").at("lambda_decomp").get<double>() == 0.0);
  // The photometric-only arm trains with zero decomposition weight.
  const std::string log = read_text_file(tmp.str("r") + "/train_log.jsonl");
  CHECK(log.find("\"lambda_decomp_eff\":0.0") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected with a usage error") {
  TempDir tmp("bad_key");
  const int rc = run("train " + fixture().dataset + " --out " + tmp.str("r") +
                     " --train.iterationz=3",
                     tmp.str("log.txt"));
  CHECK(rc == 2);
  CHECK(read_text_file(tmp.str("log.txt")).find("unknown key") !=
        std::string::npos);
}

TEST_CASE("render and decompose write their layers") {
  const auto& fx = fixture();
  TempDir tmp("render");
  REQUIRE(run("render --checkpoint " + fx.checkpoint + " --dataset " +
              fx.dataset + " --traversal 0 --frame 0 --out " + tmp.str("r")) ==
          0);
  CHECK(fs::exists(fs::path(tmp.str("r")) / "rgb.png"));

  REQUIRE(run("decompose --checkpoint " + fx.checkpoint + " --dataset " +
              fx.dataset + " --traversal 0 --frame 0 --out " + tmp.str("d")) ==
          0);
  for (const char* f : {"rgb.png", "render_linear.pfm", "material.pfm",
                        "illumination.pfm", "normal.pfm", "depth.pfm",
                        "static_mask.pfm", "meta.json", "normal.png"}) {
    CHECK(fs::exists(fs::path(tmp.str("d")) / f));
  }

  // Factorization identity of the exported triple on static pixels.
  const auto rgb = read_pfm(tmp.str("d") + "/render_linear.pfm");
  const auto mat = read_pfm(tmp.str("d") + "/material.pfm");
  const auto illum = read_pfm(tmp.str("d") + "/illumination.pfm");
  const auto mask = read_pfm(tmp.str("d") + "/static_mask.pfm");
  int checked = 0;
  for (int y = 0; y < rgb.height; ++y) {
    for (int x = 0; x < rgb.width; ++x) {
      if (mask.at(y, x) < 0.9f) continue;
      for (int c = 0; c < 3; ++c) {
        if (mat.at(y, x, c) < 0.011f) continue;
        CHECK(std::abs(mat.at(y, x, c) * illum.at(y, x, c) - rgb.at(y, x, c)) <
              1e-5f);
        ++checked;
      }
    }
  }
  CHECK(checked > 100);

  // Normal preview encodes (n+1)/2.
  const auto nrm = read_pfm(tmp.str("d") + "/normal.pfm");
  const auto preview = read_png(tmp.str("d") + "/normal.png");
  const int y = rgb.height / 2, x = rgb.width / 2;
  for (int c = 0; c < 3; ++c) {
    const float expect = (clamp01((nrm.at(y, x, c) + 1.f) * 0.5f));
    CHECK(std::abs(preview.at(y, x, c) - expect) < 1.5f / 255.f);
  }
}

TEST_CASE("render with an out-of-range frame exits 2") {
  const auto& fx = fixture();
  TempDir tmp("range");
  CHECK(run("render --checkpoint " + fx.checkpoint + " --dataset " +
            fx.dataset + " --traversal 0 --frame 999 --out " + tmp.str("r"),
            tmp.str("log.txt")) == 2);
}

TEST_CASE("self-relight equals a plain render bitwise; strip has 4 panels") {
  const auto& fx = fixture();
  TempDir tmp("relight");
  REQUIRE(run("render --checkpoint " + fx.checkpoint + " --dataset " +
              fx.dataset + " --traversal 0 --frame 1 --out " + tmp.str("r")) ==
          0);
  REQUIRE(run("relight --checkpoint " + fx.checkpoint + " --dataset " +
              fx.dataset + " --material-traversal 0 --light-traversal 0 " +
              "--frame 1 --out " + tmp.str("s")) == 0);
  CHECK(read_binary_file(tmp.str("r") + "/rgb.png") ==
        read_binary_file(tmp.str("s") + "/relit.png"));

  const auto strip = read_png(tmp.str("s") + "/strip.png");
  const auto frame = read_png(tmp.str("r") + "/rgb.png");
  CHECK(strip.width == 4 * frame.width);
  CHECK(strip.height == frame.height);
}

TEST_CASE("eval emits the JSON schema with a mean aggregate") {
  const auto& fx = fixture();
  TempDir tmp("eval");
  REQUIRE(run("eval --checkpoint " + fx.checkpoint + " --dataset " +
              fx.dataset + " --split test --out " + tmp.str("e")) == 0);
  const json j = json::parse(read_text_file(tmp.str("e") + "/eval_test.json"));
  REQUIRE(j.contains("per_view"));
  double acc = 0;
  for (const auto& row : j.at("per_view")) {
    CHECK(row.contains("frame"));
    CHECK(row.contains("traversal"));
    CHECK(row.contains("psnr_db"));
    CHECK(row.contains("ssim"));
    acc += row.at("psnr_db").get<double>();
  }
  const double mean = acc / double(j.at("per_view").size());
  CHECK(j.at("aggregate").at("psnr_db").get<double>() ==
        doctest::Approx(mean).epsilon(1e-9));
}

TEST_CASE("grad-check: small scale passes, injected fault fails naming class") {
  TempDir tmp("gc");
  CHECK(run("grad-check --scale small --seed 1", tmp.str("ok.txt")) == 0);
  const std::string ok = read_text_file(tmp.str("ok.txt"));
  // The report covers at least the nine required parameter classes.
  for (const char* cls :
       {"position", "scale", "rotation", "opacity", "f_geo", "mlp.material",
        "mlp.light", "e_m", "affine"}) {
    CHECK(ok.find(cls) != std::string::npos);
  }
  CHECK(run("grad-check --scale small --seed 1 --inject-fault mlp.light",
            tmp.str("bad.txt")) == 1);
  const std::string bad = read_text_file(tmp.str("bad.txt"));
  CHECK(bad.find("mlp.light") != std::string::npos);
  CHECK(bad.find("FAIL") != std::string::npos);
}
