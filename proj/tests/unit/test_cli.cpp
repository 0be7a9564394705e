#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "sdd/cli.hpp"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("cli end-to-end: synth, train, eval, report") {
  fs::path base = fs::temp_directory_path() / "sdd_cli_test";
  fs::remove_all(base);
  fs::create_directories(base);
  std::string data = (base / "data").string();
  std::string run = (base / "run").string();
  std::string run2 = (base / "run2").string();
  std::string evaldir = (base / "eval").string();

  CHECK(sdd::cli::dispatch({"synth", "--out", data, "--easy", "--seed", "7", "--height", "64", "--width", "64",
                            "--train-pos", "3", "--train-neg", "5", "--test-pos", "2", "--test-neg", "3"}) == 0);
  CHECK(fs::exists(fs::path(data) / "manifest.json"));
  CHECK(fs::exists(fs::path(data) / "train" / "images"));

  CHECK(sdd::cli::dispatch({"train", "--dataset", "synth", "--root", data, "--N", "2", "--seed", "3", "--out", run,
                            "--epochs", "2", "--lr", "0.01", "--bs", "1", "--delta", "1", "--wpos", "2", "--p", "1",
                            "--dilate", "3"}) == 0);
  CHECK(fs::exists(fs::path(run) / "manifest.json"));
  CHECK(fs::exists(fs::path(run) / "checkpoint.ckpt"));
  CHECK(fs::exists(fs::path(run) / "history.csv"));

  // rerun from the manifest reproduces the history byte for byte
  CHECK(sdd::cli::dispatch({"train", "--manifest", (fs::path(run) / "manifest.json").string(), "--out", run2}) == 0);
  CHECK(slurp(fs::path(run) / "history.csv") == slurp(fs::path(run2) / "history.csv"));
  CHECK(slurp(fs::path(run) / "manifest.json") == slurp(fs::path(run2) / "manifest.json"));

  CHECK(sdd::cli::dispatch({"eval", "--checkpoint", (fs::path(run) / "checkpoint.ckpt").string(), "--dataset",
                            "synth", "--root", data, "--test-subset", "test", "--out", evaldir}) == 0);
  CHECK(fs::exists(fs::path(evaldir) / "report_summary.json"));
  CHECK(fs::exists(fs::path(evaldir) / "report_rows.csv"));
  CHECK(fs::exists(fs::path(evaldir) / "pr_curve.png"));

  CHECK(sdd::cli::dispatch({"report", "--run", evaldir}) == 0);

  // usage errors: unknown command, missing flags, bad preset
  CHECK(sdd::cli::dispatch({"frobnicate"}) != 0);
  CHECK(sdd::cli::dispatch({"eval", "--dataset", "synth"}) != 0);
  CHECK(sdd::cli::dispatch({"train", "--dataset", "synth", "--root", data, "--preset", "nope", "--out",
                            (base / "x").string()}) == 2);
  // unreadable dataset root
  CHECK(sdd::cli::dispatch({"train", "--dataset", "synth", "--root", (base / "missing").string(), "--out",
                            (base / "y").string(), "--epochs", "1"}) == 1);

  fs::remove_all(base);
}

TEST_CASE("cli preset expansion persists resolved values") {
  fs::path base = fs::temp_directory_path() / "sdd_cli_preset";
  fs::remove_all(base);
  fs::create_directories(base);
  std::string data = (base / "data").string();
  CHECK(sdd::cli::dispatch({"synth", "--out", data, "--seed", "1", "--height", "64", "--width", "64", "--train-pos",
                            "2", "--train-neg", "2", "--test-pos", "1", "--test-neg", "1"}) == 0);
  std::string run = (base / "run").string();
  // dagm preset with an epoch override: manifest must carry the resolved mix
  CHECK(sdd::cli::dispatch({"train", "--dataset", "synth", "--root", data, "--preset", "dagm", "--epochs", "1",
                            "--seed", "2", "--out", run}) == 0);
  std::string manifest = slurp(fs::path(run) / "manifest.json");
  CHECK(manifest.find("\"n_ep\": 1") != std::string::npos);       // override kept
  CHECK(manifest.find("\"w_pos\": 10.0") != std::string::npos);   // preset value kept
  CHECK(manifest.find("\"eta\": 0.05") != std::string::npos);
  CHECK(manifest.find("\"preset\"") == std::string::npos);        // resolved values, not the name
  fs::remove_all(base);
}
