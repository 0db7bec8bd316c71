// Copyright 2026 The citycd Authors.
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

// Writes a planted synthetic corpus (checkins.tsv, venues.tsv).

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>

#include "citycd/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the planted three-city fixture"};
  std::string out_dir;
  std::uint64_t seed = 7;
  app.add_option("dir", out_dir, "output directory")->required();
  app.add_option("--seed", seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  const auto corpus = citycd::make_planted_corpus(citycd::fixture_spec(seed));
  std::filesystem::create_directories(out_dir);
  std::ofstream(std::filesystem::path(out_dir) / "checkins.tsv", std::ios::binary)
      << corpus.checkins;
  std::ofstream(std::filesystem::path(out_dir) / "venues.tsv", std::ios::binary)
      << corpus.venues;
  std::printf("wrote %s/checkins.tsv and venues.tsv\n", out_dir.c_str());
  return 0;
}
