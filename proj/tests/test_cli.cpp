// Copyright 2026 The FUSI Scanner Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <httplib.h>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "fusi/cli.hpp"
#include "fusi/dataset.hpp"
#include "fusi/image.hpp"
#include "fusi/model_file.hpp"
#include "support.hpp"

using namespace fusi;
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
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), {}};
}

/// Runs the real binary in the background and returns its pid; its stdout
/// goes to `log`.
pid_t spawn(const std::vector<std::string>& args, const fs::path& log, const std::vector<std::string>& env = {}) {
  const pid_t pid = fork();
  if (pid == 0) {
    if (std::freopen(log.c_str(), "w", stdout) == nullptr) _exit(126);
    if (std::freopen((log.string() + ".err").c_str(), "w", stderr) == nullptr) _exit(126);
    for (const auto& kv : env) putenv(const_cast<char*>(kv.c_str()));
    std::vector<char*> argv{const_cast<char*>(FUSI_CLI_PATH)};
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execv(FUSI_CLI_PATH, argv.data());
    _exit(127);
  }
  return pid;
}

/// Waits for "serving ... on http://host:PORT" in the log; 0 if the process
/// exited first.
int wait_for_port(pid_t pid, const fs::path& log) {
  for (int i = 0; i < 500; ++i) {
    const std::string text = slurp(log);
    const auto at = text.rfind(':');
    if (text.find("serving") != std::string::npos && at != std::string::npos) return std::stoi(text.substr(at + 1));
    int status = 0;
    if (waitpid(pid, &status, WNOHANG) == pid) return 0;
    usleep(10000);
  }
  return 0;
}

int reap(pid_t pid) {
  int status = 0;
  waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Fixture {
  fs::path root = testing::temp_dir("cli");
  fs::path data = root / "data";
  Fixture(std::size_t per_class = 7) {
    auto images = testing::color_noise_dataset(per_class, 32, 3);
    images.pop_back();  // 20 files for per_class = 7
    testing::write_dataset_dir(data, images);
  }
  ~Fixture() { fs::remove_all(root); }
};

}  // namespace

TEST_CASE("usage errors exit 1 with a message on stderr") {
  const Run none = cli({});
  CHECK(none.code == kExitUsage);
  CHECK_FALSE(none.err.empty());
  const Run unknown = cli({"split", "--data", "x", "--manifest", "m", "--bogus"});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("--bogus") != std::string::npos);
  CHECK(cli({"train", "--arch", "vgg", "--data", "d", "--out", "o"}).code == kExitUsage);
  CHECK(cli({"classify", "--model", "m", "--image", "i", "--threshold", "2"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("split") {
  Fixture fx;
  const fs::path manifest = fx.root / "manifest.json";
  const Run r = cli({"split", "--data", fx.data, "--ratios", "0.8,0.15,0.05", "--seed", "1", "--manifest", manifest});
  CHECK(r.code == 0);
  CHECK(r.out == "train 16, validation 3, test 1\n");
  const DatasetManifest m = manifest_from_json(slurp(manifest));
  CHECK(m.entries.size() == 20);
  CHECK(m.counts() == SplitCounts{16, 3, 1});
  CHECK(m.seed == 1);
  CHECK(json::parse(slurp(manifest))["counts"]["train"] == 16);
  CHECK(cli({"split", "--data", fx.data, "--ratios", "0.9,0.9,0.1", "--manifest", manifest}).code == kExitData);
  CHECK(cli({"split", "--data", fx.root / "missing", "--manifest", manifest}).code == kExitData);
}

TEST_CASE("augment") {
  Fixture fx;
  const fs::path out = fx.root / "aug";
  const Run r = cli({"augment", "--data", fx.data, "--out", out, "--seed", "2", "--variants", "3"});
  REQUIRE(r.code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(out)) files += e.is_regular_file() ? 1 : 0;
  CHECK(files == 20 * 4);
  CHECK(fs::exists(out / "healthy" / "img_0014_aug2.png"));
  CHECK(read_image(out / "healthy" / "img_0014.png") == read_image(fx.data / "healthy" / "img_0014.png"));
  CHECK(load_directory_dataset(out).images.size() == 80);
}

TEST_CASE("train, inspect and classify") {
  Fixture fx;
  const fs::path model = fx.root / "m.fusi";
  const fs::path report = fx.root / "report.json";
  const Run t = cli({"train", "--arch", "tiny-residual", "--data", fx.data, "--epochs", "4", "--seed", "3", "--out",
                     model, "--report", report, "--variants", "1"});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("Validation accuracy") != std::string::npos);
  const json rep = json::parse(slurp(report));
  CHECK(rep["perEpoch"].size() == 4);
  CHECK(rep["config"]["batchSize"] == 32);

  const Run inspect = cli({"inspect-model", "--model", model});
  CHECK(inspect.code == 0);
  CHECK(inspect.out.find("labels: 0=black_sigatoka 1=fusarium_wilt_race1 2=healthy") != std::string::npos);
  CHECK(inspect.out.find("predictions\tdense") != std::string::npos);

  const fs::path image = fx.data / "healthy" / "img_0015.png";
  const Run text = cli({"classify", "--model", model, "--image", image});
  CHECK(text.code == 0);
  CHECK(text.out.find("confidence") != std::string::npos);
  const Run js = cli({"classify", "--model", model, "--image", image, "--json"});
  CHECK(js.code == 0);
  CHECK(std::count(js.out.begin(), js.out.end(), '\n') == 1);
  const json j = json::parse(js.out);
  for (const char* key : {"label", "confidence", "per_class", "recommendation", "model", "latency_ms"}) {
    CHECK(j.contains(key));
  }
  CHECK(j.size() == 6);
  const Run always = cli({"classify", "--model", model, "--image", image, "--json", "--threshold", "1"});
  CHECK(json::parse(always.out)["recommendation"].is_string() == (j["confidence"].get<double>() < 1.0));

  // Backbone transfer from an existing file.
  const Run warm = cli({"train", "--arch", "tiny-residual", "--data", fx.data, "--epochs", "1", "--out",
                        fx.root / "w.fusi", "--backbone", model});
  CHECK(warm.code == 0);
  CHECK(warm.out.find("backbone: copied") != std::string::npos);

  // Data and format failures exit 2; a numeric abort exits 3.
  std::ofstream(fx.root / "junk.png") << "junk";
  CHECK(cli({"classify", "--model", model, "--image", fx.root / "junk.png"}).code == kExitData);
  std::ofstream(fx.root / "bad.fusi") << "FUSI junk";
  const Run bad = cli({"inspect-model", "--model", fx.root / "bad.fusi"});
  CHECK(bad.code == kExitData);
  CHECK(bad.err.find("truncated at byte") != std::string::npos);
  const Run nan = cli({"train", "--arch", "tiny-residual", "--data", fx.data, "--epochs", "3", "--out",
                       fx.root / "n.fusi", "--lr", "1e38", "--momentum", "0"});
  CHECK(nan.code == kExitNumeric);
  CHECK(nan.err.find("max |logit|") != std::string::npos);
}

TEST_CASE("inceptionv3 trains for 150 epochs by default") {
  Fixture fx(3);
  const fs::path report = fx.root / "r.json";
  const Run r = cli({"train", "--arch", "inceptionv3", "--input-size", "75", "--data", fx.data, "--out",
                     fx.root / "i.fusi", "--report", report, "--variants", "0"});
  REQUIRE(r.code == 0);
  const json rep = json::parse(slurp(report));
  CHECK(rep["perEpoch"].size() == 150);
  CHECK(rep["config"]["epochs"] == 150);
  const Run explicit_epochs = cli({"train", "--arch", "inceptionv3", "--input-size", "75", "--data", fx.data,
                                   "--epochs", "150", "--out", fx.root / "j.fusi", "--report", report, "--variants",
                                   "0"});
  CHECK(explicit_epochs.code == 0);
  CHECK(json::parse(slurp(report))["config"]["epochs"] == 150);
}

TEST_CASE("serve binary: health, parity with classify, env fallback, startup failures") {
  Fixture fx;
  const fs::path model = fx.root / "m.fusi";
  REQUIRE(cli({"train", "--arch", "tiny-residual", "--data", fx.data, "--epochs", "2", "--out", model}).code == 0);
  const fs::path log = fx.root / "serve.log";
  const pid_t pid = spawn({"serve", "--port", "0"}, log, {"FUSI_MODEL=" + model.string()});
  const int port = wait_for_port(pid, log);
  REQUIRE(port > 0);
  httplib::Client c("127.0.0.1", port);
  const auto health = c.Get("/v1/health");
  REQUIRE(health);
  CHECK(json::parse(health->body)["model"] == "tiny-residual");

  const fs::path image = fx.data / "black_sigatoka" / "img_0002.png";
  const auto bytes = read_file_bytes(image);
  httplib::MultipartFormDataItems items{{"image", std::string(bytes.begin(), bytes.end()), "leaf.png", "image/png"}};
  const auto served = c.Post("/v1/classify", items);
  REQUIRE(served);
  const json s = json::parse(served->body);
  const json local = json::parse(cli({"classify", "--model", model, "--image", image, "--json"}).out);
  CHECK(s["label"] == local["label"]);
  CHECK(s["confidence"] == local["confidence"]);
  CHECK(s["per_class"] == local["per_class"]);

  // A second instance on the same port fails to start.
  const fs::path log2 = fx.root / "serve2.log";
  const pid_t dup = spawn({"serve", "--model", model, "--port", std::to_string(port)}, log2);
  CHECK(reap(dup) == kExitData);
  kill(pid, SIGTERM);
  CHECK(reap(pid) == 0);

  const pid_t missing = spawn({"serve", "--model", (fx.root / "nope.fusi").string(), "--port", "0"}, log2);
  CHECK(reap(missing) == kExitData);
  const pid_t no_model = spawn({"serve", "--port", "0"}, log2);
  CHECK(reap(no_model) == kExitUsage);
}
