// Copyright 2026 The DP Coupling Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "gtest/gtest.h"

namespace dpcouple {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::json;

struct CliRun {
  int code = -1;
  Json report;
};

CliRun Cli(const std::string& args) {
  const std::string cmd = std::string(DPCOUPLE_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  for (size_t n; (n = fread(buf, 1, sizeof(buf), pipe)) > 0;) out.append(buf, n);
  CliRun r;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.report = Json::parse(out, nullptr, false);
  return r;
}

std::string Example(const std::string& name) {
  return std::string(DPCOUPLE_SOURCE_DIR) + "/examples/" + name;
}

TEST(CliTest, BudgetAndParams) {
  CliRun adv = Cli("budget adv --n 16 --eps 0.1 --omega 0.1353352832");
  EXPECT_EQ(adv.code, 0);
  EXPECT_EQ(adv.report["status"], "pass");
  EXPECT_NEAR(adv.report["result"]["eps"].get<double>(), 0.968273468975, 1e-11);
  CliRun seq = Cli("budget seq --n 3 --eps 0.25 --delta 0.01");
  EXPECT_NEAR(seq.report["result"]["eps"].get<double>(), 0.75, 1e-12);
  EXPECT_NEAR(seq.report["result"]["delta"].get<double>(), 0.03, 1e-12);
  CliRun p = Cli("params asvbt --eps 1 --delta 0.5");
  EXPECT_EQ(p.code, 0);
  EXPECT_NEAR(p.report["result"]["eps_prime"].get<double>(), 0.150140301098, 1e-11);
  EXPECT_NEAR(p.report["result"]["gamma"].get<double>(), 136.721660447, 1e-8);
}

TEST(CliTest, ErrorsAndUsage) {
  CliRun bad = Cli("budget adv --n 2 --eps 0.1 --omega 0");
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(bad.report["status"], "error");
  EXPECT_EQ(bad.report["result"]["error"]["kind"], "BadOmega");
  EXPECT_EQ(Cli("no-such-command").code, 2);
  EXPECT_EQ(Cli("check /nonexistent/proof.json").code, 2);
}

TEST(CliTest, CheckShippedAndCorruptedProof) {
  CliRun ok = Cli("check " + Example("ptr.proof.json"));
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.report["result"]["accepted"], true);
  EXPECT_NEAR(ok.report["result"]["budget"]["delta"].get<double>(), 0.1, 1e-12);

  // Same proof next to a copy of its program, claiming less eps.
  const fs::path dir = fs::temp_directory_path() / "dpcouple_cli_test";
  fs::create_directories(dir);
  fs::copy_file(Example("ptr.prog"), dir / "ptr.prog",
                fs::copy_options::overwrite_existing);
  std::ifstream in(Example("ptr.proof.json"));
  Json doc = Json::parse(in);
  doc["root"]["conclusion"]["eps"] = 0.5;
  std::ofstream(dir / "bad.proof.json") << doc.dump(1);
  CliRun bad = Cli("check " + (dir / "bad.proof.json").string());
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.report["status"], "fail");
  EXPECT_EQ(bad.report["result"]["accepted"], false);
  EXPECT_EQ(bad.report["result"]["failure"]["kind"], "BudgetMismatch") << bad.report.dump(1);
  fs::remove_all(dir);
}

TEST(CliTest, EmitMatchesShippedExample) {
  const fs::path out = fs::temp_directory_path() / "dpcouple_cli_emit.prog";
  CliRun r = Cli("emit ptr --out " + out.string());
  EXPECT_EQ(r.code, 0);
  std::ifstream a(out), b(Example("ptr.prog"));
  const std::string got((std::istreambuf_iterator<char>(a)), {});
  const std::string want((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(got, want);
  fs::remove(out);
}

TEST(CliTest, RunAndValidate) {
  CliRun run = Cli("run " + Example("ptr.prog") + " --mem 'd=[1,1,0]'");
  EXPECT_EQ(run.code, 0) << run.report.dump(1);
  CliRun val = Cli("validate " + Example("ptr.prog") +
                " --pre 'adj(d<1>, d<2>)' --post 'r<1> = r<2>' --eps 1 --delta 0.1");
  EXPECT_EQ(val.code, 0) << val.report.dump(1);
  CliRun tight = Cli("validate " + Example("ptr.prog") +
                  " --pre 'adj(d<1>, d<2>)' --post 'r<1> = r<2>' --eps 0.5 --delta 0");
  EXPECT_EQ(tight.code, 1) << tight.report.dump(1);
}

}  // namespace
}  // namespace dpcouple
