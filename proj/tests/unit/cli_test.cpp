//------------------------------------------------------------------------------
//
//   Copyright 2026 The LedgerEHR Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "cli.hpp"
#include "ledgerehr/netsim.hpp"
#include "support/fixtures.hpp"
#include "support/node_fixture.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace ledgerehr {
namespace {

using cli::CliCommand;
using cli::Environment;
using cli::UsageError;
using cli::Verb;
using testing::TempDir;

struct Result
{
  int         code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> const &args, Environment const &env = {})
{
  std::ostringstream out, err;
  int                code = cli::run(args, env, out, err);
  return {code, out.str(), err.str()};
}

std::string usage_message(std::vector<std::string> const &args)
{
  try
  {
    cli::parse_args(args);
  }
  catch (UsageError const &e)
  {
    return e.what();
  }
  return {};
}

// Five committed blocks in <root>/node0.
std::filesystem::path make_chain(std::filesystem::path const &root)
{
  testing::NodeCluster cluster(1, root);
  for (std::size_t i = 0; i < 5; ++i)
  {
    auto r = cluster.submit_record(0, cluster.org, testing::table_rows()[i]);
    EXPECT_EQ(r.status, 202);
    EXPECT_TRUE(cluster.settle_to(i + 1));
  }
  return root / "node0";
}

TEST(CliParseTest, KeygenCommand)
{
  auto c = cli::parse_args({"keygen", "--out", "k.seed"});
  EXPECT_EQ(c.verb, Verb::Keygen);
  EXPECT_EQ(c.out, "k.seed");
  EXPECT_FALSE(c.seed);
}

TEST(CliParseTest, MissingFlagIsNamed)
{
  EXPECT_NE(usage_message({"verify"}).find("--data"), std::string::npos);
  EXPECT_NE(usage_message({"tamper", "--data", "d", "--offset", "1"}).find("--height"),
            std::string::npos);
  EXPECT_NE(usage_message({"simulate"}).find("--scenario"), std::string::npos);
}

TEST(CliParseTest, UnknownVerbListsVerbs)
{
  auto msg = usage_message({"frobnicate"});
  for (auto verb : {"keygen", "start", "inspect", "verify", "tamper", "simulate"})
  {
    EXPECT_NE(msg.find(verb), std::string::npos) << verb;
  }
  EXPECT_NE(usage_message({}).find("keygen"), std::string::npos);
}

TEST(CliParseTest, UnknownFlagIsRejected)
{
  EXPECT_NE(usage_message({"verify", "--data", "d", "--fast"}).find("--fast"), std::string::npos);
  EXPECT_NE(usage_message({"keygen", "--out", "k", "--seed", "abc"}).find("--seed"), std::string::npos);
  EXPECT_NE(usage_message({"tamper", "--data", "d", "--height", "x", "--offset", "1"}).find("--height"),
            std::string::npos);
  EXPECT_NE(usage_message({"tamper", "--data", "d", "--height", "1", "--offset", "1", "--mask", "0"})
                .find("--mask"),
            std::string::npos);
  EXPECT_FALSE(usage_message({"verify", "--data", "a", "keygen"}).empty());
}

TEST(CliParseTest, HelpPerVerb)
{
  auto c = cli::parse_args({"tamper", "--help"});
  EXPECT_EQ(c.verb, Verb::Help);
  EXPECT_NE(c.help_text.find("--offset"), std::string::npos);
  auto top = run({"--help"});
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.out.find("simulate"), std::string::npos);
}

TEST(CliParseTest, ConfigFromEnvironment)
{
  EXPECT_NE(usage_message({"start"}).find("LEDGEREHR_CONFIG"), std::string::npos);
  Environment env;
  env.config_path = "/etc/ledgerehr/node.json";
  EXPECT_EQ(cli::parse_args({"start"}, env).config, "/etc/ledgerehr/node.json");
  EXPECT_EQ(cli::parse_args({"start", "--config", "x.json"}, env).config, "x.json");
}

TEST(CliParseTest, UsageErrorsExitTwo)
{
  EXPECT_EQ(run({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run({"verify"}).code, cli::kExitUsage);
}

TEST(CliTest, KeygenWritesSeed)
{
  TempDir dir;
  auto    path = (dir.path() / "k.seed").string();
  auto    r    = run({"keygen", "--out", path, "--label", "alice"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto key = keygen(read_seed_file(path));
  EXPECT_EQ(key.id(), keygen_from_label("alice").id());
  EXPECT_NE(r.out.find("identity_id " + key.id().hex()), std::string::npos);

  EXPECT_EQ(run({"keygen", "--out", path}).code, cli::kExitFailure);
  EXPECT_EQ(run({"keygen", "--out", path, "--force"}).code, 0);
  EXPECT_NE(keygen(read_seed_file(path)).id(), key.id());

  std::string seed(64, '7');
  ASSERT_EQ(run({"keygen", "--out", path, "--force", "--seed", seed}).code, 0);
  EXPECT_EQ(to_hex(read_seed_file(path)), seed);
}

TEST(CliTest, VerifyTamperVerify)
{
  TempDir dir;
  auto    data = make_chain(dir.path()).string();

  auto ok = run({"verify", "--data", data});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.out, "OK height=5\n");

  auto t = run({"tamper", "--data", data, "--height", "3", "--offset", "150"});
  EXPECT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.err.find("WARNING"), std::string::npos);

  auto bad = run({"verify", "--data", data});
  EXPECT_EQ(bad.code, cli::kExitFailure);
  EXPECT_NE(bad.out.find("height=3"), std::string::npos) << bad.out;

  EXPECT_EQ(run({"tamper", "--data", data, "--height", "99", "--offset", "0"}).code,
            cli::kExitFailure);
  EXPECT_EQ(run({"verify", "--data", (dir.path() / "missing").string()}).code, cli::kExitFailure);
}

TEST(CliTest, InspectIsDeterministic)
{
  TempDir dir;
  auto    data  = make_chain(dir.path()).string();
  auto    first = run({"inspect", "--data", data});
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_EQ(run({"inspect", "--data", data}).out, first.out);
  EXPECT_NE(first.out.find("height 5\n"), std::string::npos);
  EXPECT_NE(first.out.find("block 5 hash="), std::string::npos);

  auto block = run({"inspect", "--data", data, "--height", "2"});
  ASSERT_EQ(block.code, 0);
  EXPECT_NE(block.out.find("tx 0 "), std::string::npos);
  EXPECT_NE(block.out.find("CreateRecord"), std::string::npos);

  auto hash = block.out.substr(block.out.find("tx 0 ") + 5, 64);
  auto tx   = run({"inspect", "--data", data, "--tx", hash});
  ASSERT_EQ(tx.code, 0) << tx.err;
  EXPECT_NE(tx.out.find("proof valid"), std::string::npos);
  EXPECT_NE(tx.out.find("patient_id = 2"), std::string::npos);

  EXPECT_EQ(run({"inspect", "--data", data, "--height", "6"}).code, cli::kExitFailure);
  EXPECT_EQ(run({"inspect", "--data", data, "--tx", std::string(64, 'a')}).code, cli::kExitFailure);
}

TEST(CliTest, SimulateFaultFree)
{
  TempDir          dir;
  netsim::Scenario s;
  s.n_validators = 4;
  s.seed         = 7;
  s.max_ticks    = 1500;
  for (std::size_t i = 0; i < 3; ++i)
  {
    s.workload.push_back({10 * (i + 1), OpKind::CreateRecord, testing::table_rows()[i]});
  }
  auto path = dir.path() / "s.json";
  std::ofstream(path) << netsim::scenario_to_json(s);

  auto trace = (dir.path() / "trace.tsv").string();
  auto r     = run({"simulate", "--scenario", path.string(), "--trace-out", trace});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("safety safe"), std::string::npos);
  EXPECT_NE(r.out.find("liveness live"), std::string::npos);
  EXPECT_NE(r.out.find("validator 3 height="), std::string::npos);
  EXPECT_NE(r.out.find("txs=3"), std::string::npos);
  EXPECT_TRUE(std::filesystem::file_size(trace) > 0);
  EXPECT_EQ(run({"simulate", "--scenario", path.string()}).out, r.out);
}

TEST(CliTest, SimulateOutsideTolerance)
{
  TempDir          dir;
  netsim::Scenario s;
  s.n_validators   = 4;
  s.max_ticks      = 800;
  s.workload       = {{10, OpKind::CreateRecord, testing::table_rows()[0]}};
  s.crash_schedule = {{1, 0, std::nullopt}, {2, 0, std::nullopt}};
  auto path        = dir.path() / "s.json";
  std::ofstream(path) << netsim::scenario_to_json(s);
  auto r = run({"simulate", "--scenario", path.string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("liveness outside tolerance"), std::string::npos);

  std::ofstream(path, std::ios::trunc) << R"({"n_validators": 0})";
  EXPECT_EQ(run({"simulate", "--scenario", path.string()}).code, cli::kExitFailure);
}

TEST(CliTest, StartServesAndStops)
{
  TempDir dir;
  auto    key = keygen_from_label("cli-start");
  write_seed_file(dir.path() / "v.seed", key.private_key.seed());
  NodeConfig config;
  config.validators  = {{key.public_key, ""}};
  config.key_path    = "v.seed";
  config.data_dir    = "data";
  config.listen_port = 0;
  std::ofstream(dir.path() / "node.json") << node_config_to_json(config);

  Environment env;
  env.config_path = (dir.path() / "node.json").string();
  auto r          = run({"start", "--run-ms", "200"}, env);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("listening 127.0.0.1:"), std::string::npos);
  EXPECT_NE(r.out.find("stopped height=0"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "data" / "chain.json"));

  auto again = run({"verify", "--data", (dir.path() / "data").string()});
  EXPECT_EQ(again.out, "OK height=0\n");

  std::ofstream(dir.path() / "bad.json") << "{}";
  EXPECT_EQ(run({"start", "--config", (dir.path() / "bad.json").string()}).code, cli::kExitFailure);
}

}  // namespace
}  // namespace ledgerehr
