#include "spaceblender/image_io.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SPACEBLENDER_CLI) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("sb_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("") == 2);
  CHECK(run("run --no-such-flag") == 2);
  CHECK(run("run --images a.png --backend remote") == 2);
  CHECK(run("run --images a.png --weights 1,2") == 2);
  CHECK(run("synth-scene --scene nowhere --out x.png") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("synth-scene, plan and run produce their files deterministically") {
  TempDir tmp;
  const std::vector<std::string> scenes{"office", "lounge", "studio", "bedroom"};
  std::string images;
  for (const auto& s : scenes) {
    const auto png = tmp.path / (s + ".png");
    REQUIRE(run("synth-scene --scene " + s + " --out " + png.string()) == 0);
    CHECK(spaceblender::read_image(png).width == 512);
    images += (images.empty() ? "" : ",") + png.string();
  }
  const auto depth = tmp.path / "box.depth";
  REQUIRE(run("synth-scene --scene box_room --size 64 --out " + (tmp.path / "box.png").string() + " --depth-out " +
              depth.string()) == 0);
  CHECK(spaceblender::read_depth_file(depth).cols() == 64);

  const auto plan = tmp.path / "plan.json";
  REQUIRE(run("plan --quiet --images " + images + " --out " + plan.string()) == 0);
  const auto traj = nlohmann::json::parse(slurp(plan));
  CHECK(traj["steps"][0]["purpose"] == "blend");
  CHECK(traj["steps"][0]["width"] == 1280);

  const auto a = tmp.path / "a" / "scene.ply";
  const auto b = tmp.path / "b" / "scene.ply";
  REQUIRE(run("run --quiet --backend synthetic --images " + images + " --seed 7 --out " + a.string()) == 0);
  REQUIRE(run("run --quiet --backend synthetic --images " + images + " --seed 7 --out " + b.string()) == 0);
  const std::string bytes = slurp(a);
  CHECK(bytes.rfind("ply\n", 0) == 0);
  CHECK(bytes == slurp(b));
  const auto manifest = nlohmann::json::parse(slurp(tmp.path / "a" / "scene.manifest.json"));
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["inputs"].size() == 4);
  CHECK(manifest["output"]["format"] == "ply");
  CHECK(manifest["plan"]["blend_steps"] == 4);
  CHECK(run("run --quiet --images " + (tmp.path / "missing.png").string() + " --out " +
            (tmp.path / "m.ply").string()) == 1);
}
