/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 dwinr contributors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dwinr/cli.hpp"
#include "dwinr/io.hpp"

using namespace dwinr;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dwinr_test_cli";

const char* kConfig = R"(geometry:
  num_elements: 8
sequence:
  num_transmits: 5
grid:
  width: 16
  height: 16
  depth: 0.02
simulation:
  frames: 5
  seed: 4
  density: 500000
training:
  epochs: 2
  batch_size: 2
  learning_rate: 0.001
  embedding_length: 2
  hidden: 8
  num_layers: 3
  skip_layer: 2
  ssim_window: 5
  ssim_sigma: 1.0
)";

int run(const std::string& args, const std::string& log = "cli.log") {
  const std::string cmd = std::string(DWINR_CLI_PATH) + " " + args + " > " + (kWork / log).string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string path(const std::string& name) { return (kWork / name).string(); }

struct Workspace {
  Workspace() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    std::ofstream(kWork / "run.yaml") << kConfig;
  }
};

}  // namespace

TEST_CASE("grid and seed helpers") {
  CHECK(cli::parse_grid("128x64") == std::pair<std::size_t, std::size_t>{128, 64});
  CHECK_THROWS(cli::parse_grid("128"));
  CHECK_THROWS(cli::parse_grid("0x4"));
  CHECK(cli::frame_seed(1, 2, 0) == cli::frame_seed(1, 2, 0));
  CHECK(cli::frame_seed(1, 2, 0) != cli::frame_seed(1, 2, 1));
  CHECK(cli::frame_seed(1, 2, 0) != cli::frame_seed(1, 3, 0));
}

TEST_CASE("frame phantoms stay inside the imaged sector") {
  config::RunConfig cfg;
  for (auto kind : {config::PhantomKind::Cyst, config::PhantomKind::Mixed}) {
    cfg.simulation.phantom = kind;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto ph = cli::make_frame_phantom(cfg, 9, i);
      CHECK(ph.size() > 100);
      CHECK(ph.max_range() <= cfg.grid.depth);
      CHECK(cli::make_frame_phantom(cfg, 9, i).scatterers.size() == ph.size());
    }
  }
}

TEST_CASE("usage errors exit with status 2") {
  Workspace w;
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("beamform") == 2);
  CHECK(run("beamform --in x.udw --format gif") == 2);
  CHECK(run("--help") == 0);
  CHECK(run("beamform --in " + path("missing.udw")) == 1);
  CHECK(slurp(kWork / "cli.log").find("error") != std::string::npos);
}

TEST_CASE("simulate, beamform, train, eval and export") {
  Workspace w;
  const std::string cfg = " --config " + path("run.yaml");
  REQUIRE(run("simulate" + cfg + " --out " + path("a.udw")) == 0);
  REQUIRE(run("simulate" + cfg + " --out " + path("b.udw")) == 0);
  CHECK(slurp(kWork / "a.udw") == slurp(kWork / "b.udw"));
  REQUIRE(run("simulate" + cfg + " --seed 5 --frames 2 --out " + path("c.udw")) == 0);
  {
    io::DatasetReader r(kWork / "a.udw");
    CHECK(r.size() == 5);
    CHECK(r.info().geometry.num_elements == 8);
    CHECK(r.info().grid.width == 16);
    io::DatasetReader c(kWork / "c.udw");
    CHECK(c.size() == 2);
    CHECK_FALSE(c.frame(0) == r.frame(0));
  }

  REQUIRE(run("beamform" + cfg + " --in " + path("a.udw") + " --out-dir " + path("img") + " --limit 2") == 0);
  CHECK(fs::exists(kWork / "img" / "frame_0000.pgm"));
  CHECK(fs::exists(kWork / "img" / "frame_0001.pgm"));
  CHECK_FALSE(fs::exists(kWork / "img" / "frame_0002.pgm"));
  REQUIRE(run("beamform" + cfg + " --in " + path("a.udw") + " --out-dir " + path("png") +
              " --format png --transmits all --limit 1") == 0);
  CHECK(fs::exists(kWork / "png" / "frame_0000.png"));
  CHECK(run("beamform" + cfg + " --in " + path("a.udw") + " --transmits 0,9") == 1);

  REQUIRE(run("train" + cfg + " --in " + path("a.udw") + " --out " + path("m1.inrw") + " --loss-csv " +
              path("l1.csv")) == 0);
  REQUIRE(run("train" + cfg + " --in " + path("a.udw") + " --out " + path("m2.inrw") + " --loss-csv " +
              path("l2.csv")) == 0);
  CHECK(slurp(kWork / "m1.inrw") == slurp(kWork / "m2.inrw"));
  CHECK(slurp(kWork / "l1.csv") == slurp(kWork / "l2.csv"));
  const auto curve = io::read_csv(kWork / "l1.csv");
  CHECK(curve.columns == std::vector<std::string>{"epoch", "train_loss", "val_loss"});
  CHECK(curve.rows.size() == 2);

  REQUIRE(run("beamform" + cfg + " --in " + path("a.udw") + " --apod checkpoint --checkpoint " + path("m1.inrw") +
              " --out-dir " + path("inr") + " --limit 1") == 0);
  CHECK(fs::exists(kWork / "inr" / "frame_0000.pgm"));

  REQUIRE(run("eval" + cfg + " --in " + path("a.udw") + " --checkpoint " + path("m1.inrw") + " --out " +
              path("metrics.csv") + " --split all") == 0);
  const auto metrics = io::read_csv(kWork / "metrics.csv");
  CHECK(metrics.rows.size() == 5);
  CHECK(slurp(kWork / "cli.log").find("psnr baseline") != std::string::npos);

  // A forced unit-output checkpoint reproduces the baseline exactly.
  REQUIRE(run("train" + cfg + " --in " + path("a.udw") + " --out " + path("ones.inrw") + " --force-unit-output --epochs 0") ==
          0);
  REQUIRE(run("eval" + cfg + " --in " + path("a.udw") + " --checkpoint " + path("ones.inrw") + " --out " +
              path("ones.csv") + " --split all") == 0);
  for (const auto& row : io::read_csv(kWork / "ones.csv").rows) {
    CHECK(row[1] == row[2]);
    CHECK(row[3] == row[4]);
  }

  REQUIRE(run("export --csv " + path("l1.csv") + " --out " + path("l1.svg")) == 0);
  CHECK(slurp(kWork / "l1.svg").find("<svg") == 0);
}
