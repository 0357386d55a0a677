#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "admgs/dataset.hpp"
#include "admgs/io.hpp"
#include "admgs/trainer.hpp"

using namespace admgs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() /
           (std::string("admgs_trainer_") + tag + "_" +
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

// Shared tiny dataset for the whole binary.
const std::string& sanity_dataset() {
  static TempDir dir("sanity_ds");
  static bool built = false;
  if (!built) {
    generate_dataset(suite_by_name("sanity-1splat"), dir.str());
    built = true;
  }
  static std::string path = dir.str();
  return path;
}

RunConfig small_config(long long iterations) {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.reproducible = true;
  cfg.train.iterations = iterations;
  cfg.model.sky_count = 64;
  cfg.model.max_static_points = 160;
  return cfg;
}

bool same_bytes(const std::string& a, const std::string& b) {
  return read_binary_file(a) == read_binary_file(b);
}

}  // namespace

TEST_CASE("two identical steps produce bitwise-identical loss records") {
  const RunConfig cfg = small_config(10);
  TrainSession s1(load_dataset(sanity_dataset()), cfg);
  TrainSession s2(load_dataset(sanity_dataset()), cfg);
  for (int i = 0; i < 3; ++i) {
    const StepRecord a = s1.step();
    const StepRecord b = s2.step();
    CHECK(std::memcmp(&a.losses.total, &b.losses.total, sizeof(float)) == 0);
    CHECK(std::memcmp(&a.losses.photometric, &b.losses.photometric,
                      sizeof(float)) == 0);
    REQUIRE(a.grad_norms.size() == b.grad_norms.size());
    for (std::size_t g = 0; g < a.grad_norms.size(); ++g) {
      CHECK(a.grad_norms[g].second == b.grad_norms[g].second);
    }
  }
}

TEST_CASE("sanity run: loss decreases by 10x over 200 iterations") {
  TempDir out("sanity_run");
  TrainSession session(load_dataset(sanity_dataset()), small_config(200));
  const StepRecord first = session.step();
  StepRecord last = first;
  while (session.iteration() < 200) last = session.step();
  CHECK(double(last.losses.photometric) <
        0.1 * double(first.losses.photometric));
}

TEST_CASE("checkpoint: save-load-save round-trips to identical bytes") {
  TempDir tmp("ckpt");
  TrainSession session(load_dataset(sanity_dataset()), small_config(10));
  for (int i = 0; i < 4; ++i) session.step();
  session.save(tmp.str("a.admg"));
  const LoadedCheckpoint ckpt = load_checkpoint(tmp.str("a.admg"));
  TrainSession resumed(load_dataset(sanity_dataset()), ckpt);
  resumed.save(tmp.str("b.admg"));
  CHECK(same_bytes(tmp.str("a.admg"), tmp.str("b.admg")));
}

TEST_CASE("checkpoint load errors are distinct") {
  TempDir tmp("ckpt_err");
  TrainSession session(load_dataset(sanity_dataset()), small_config(5));
  session.step();
  session.save(tmp.str("ok.admg"));

  SUBCASE("corrupted byte fails the checksum") {
    auto bytes = read_binary_file(tmp.str("ok.admg"));
    bytes[bytes.size() / 2] ^= 0x5a;
    write_binary_file(tmp.str("bad.admg"), bytes);
    CHECK_THROWS_AS(load_checkpoint(tmp.str("bad.admg")), ChecksumFailure);
  }
  SUBCASE("truncation is detected") {
    auto bytes = read_binary_file(tmp.str("ok.admg"));
    bytes.resize(bytes.size() / 3);
    write_binary_file(tmp.str("short.admg"), bytes);
    CHECK_THROWS_AS(load_checkpoint(tmp.str("short.admg")), TruncatedFile);
  }
  SUBCASE("bad magic or version is a version mismatch") {
    auto bytes = read_binary_file(tmp.str("ok.admg"));
    bytes[0] = 'X';
    write_binary_file(tmp.str("magic.admg"), bytes);
    CHECK_THROWS_AS(load_checkpoint(tmp.str("magic.admg")), VersionMismatch);
    bytes = read_binary_file(tmp.str("ok.admg"));
    bytes[4] = 99;  // version field (crc will fail later, version first)
    write_binary_file(tmp.str("ver.admg"), bytes);
    CHECK_THROWS_AS(load_checkpoint(tmp.str("ver.admg")), VersionMismatch);
  }
}

TEST_CASE("resumed training matches the uninterrupted run bitwise") {
  TempDir tmp("resume");
  const RunConfig cfg = small_config(12);

  TrainSession straight(load_dataset(sanity_dataset()), cfg);
  for (int i = 0; i < 12; ++i) straight.step();
  straight.save(tmp.str("straight.admg"));

  TrainSession first_half(load_dataset(sanity_dataset()), cfg);
  for (int i = 0; i < 6; ++i) first_half.step();
  first_half.save(tmp.str("half.admg"));
  TrainSession second_half(load_dataset(sanity_dataset()),
                           load_checkpoint(tmp.str("half.admg")));
  for (int i = 0; i < 6; ++i) second_half.step();
  second_half.save(tmp.str("resumed.admg"));

  CHECK(same_bytes(tmp.str("straight.admg"), tmp.str("resumed.admg")));
}

TEST_CASE("embeddings only receive gradients from observed traversals") {
  // Two traversals; every frame of traversal 1 is held out, so training
  // only ever sees traversal 0.
  TempDir data("two_trav");
  SyntheticSceneSpec spec = suite_by_name("sanity-1splat");
  spec.name = "two-trav-isolation";
  TraversalLighting l2 = spec.lighting[0];
  l2.sun_direction = Vec3<double>{0.3, -0.5, 0.81}.normalized();
  spec.lighting.push_back(l2);
  spec.trajectory.push_back(spec.trajectory[0]);
  for (auto& f : spec.trajectory[1]) f.test = true;
  generate_dataset(spec, data.str());

  RunConfig cfg = small_config(8);
  TrainSession session(load_dataset(data.str()), cfg);
  const auto before = session.scene().traversals.embedding;
  std::vector<float> e1_before(
      before.row(1), before.row(1) + before.cols);
  for (int i = 0; i < 8; ++i) session.step();
  const auto& after = session.scene().traversals.embedding;
  for (std::size_t i = 0; i < after.cols; ++i) {
    CHECK(after.row(1)[i] == e1_before[i]);  // bitwise unchanged
  }
  // Traversal 0 did learn.
  bool changed = false;
  for (std::size_t i = 0; i < after.cols; ++i) {
    changed |= after.row(0)[i] != before.row(0)[i];
  }
  CHECK(changed);
}

TEST_CASE("relight with equal traversals is bitwise identical to render") {
  TrainSession session(load_dataset(sanity_dataset()), small_config(5));
  for (int i = 0; i < 3; ++i) session.step();
  const Image<float> a = session.render(0, 1).affine_rgb;
  const Image<float> b = session.relight(0, 0, 1).affine_rgb;
  REQUIRE(a.data.size() == b.data.size());
  CHECK(std::memcmp(a.data.data(), b.data.data(),
                    a.data.size() * sizeof(float)) == 0);
}

TEST_CASE("evaluate: aggregate equals the mean of per-view metrics") {
  TrainSession session(load_dataset(sanity_dataset()), small_config(5));
  session.step();
  const EvalReport rep = session.evaluate("train");
  REQUIRE(!rep.rows.empty());
  double acc_psnr = 0, acc_ssim = 0;
  for (const auto& r : rep.rows) {
    acc_psnr += r.psnr_db;
    acc_ssim += r.ssim;
  }
  CHECK(rep.mean_psnr_db ==
        doctest::Approx(acc_psnr / double(rep.rows.size())).epsilon(1e-9));
  CHECK(rep.mean_ssim ==
        doctest::Approx(acc_ssim / double(rep.rows.size())).epsilon(1e-9));
  CHECK_THROWS_AS(session.evaluate("nope"), InvalidArgument);
}

TEST_CASE("diverging training raises TrainingDivergence") {
  RunConfig cfg = small_config(50);
  cfg.lr.opacity = 1e12;  // blow up the opacity logits
  cfg.lr.scale = 1e12;
  TrainSession session(load_dataset(sanity_dataset()), cfg);
  bool diverged = false;
  try {
    for (int i = 0; i < 50; ++i) session.step();
  } catch (const TrainingDivergence&) {
    diverged = true;
  }
  CHECK(diverged);
}

TEST_CASE("run() writes logs, checkpoints, and eval tables") {
  TempDir out("run_dir");
  RunConfig cfg = small_config(6);
  cfg.train.checkpoint_interval = 3;
  TrainSession session(load_dataset(sanity_dataset()), cfg);
  session.run(out.str());
  CHECK(fs::exists(out.path / "checkpoint.admg"));
  CHECK(fs::exists(out.path / "checkpoint_000003.admg"));
  CHECK(fs::exists(out.path / "train_log.jsonl"));
  CHECK(fs::exists(out.path / "config.json"));
  CHECK(fs::exists(out.path / "eval_train.txt"));
  CHECK(fs::exists(out.path / "eval_test.json"));
}
