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

#include "ledgerehr/merkle.hpp"
#include "ledgerehr/node.hpp"
#include "support/fixtures.hpp"
#include "support/node_fixture.hpp"

#include <gtest/gtest.h>

#include "httplib.h"
#include "json.hpp"

#include <fstream>

namespace ledgerehr {
namespace {

using nlohmann::json;
using testing::NodeCluster;
using testing::table_rows;
using testing::TempDir;

json body_of(ApiResponse const &r)
{
  return json::parse(r.body);
}

PatientRecord row(std::size_t i)
{
  return table_rows().at(i);
}

TEST(NodeConfigTest, JsonRoundTrip)
{
  NodeCluster cluster(2);
  auto        c = cluster.config;
  c.key_path    = "keys/v0.seed";
  c.data_dir    = "data";
  c.listen_host = "0.0.0.0";
  c.listen_port = 9001;
  auto back     = node_config_from_json(node_config_to_json(c));
  EXPECT_EQ(back.network_name, c.network_name);
  EXPECT_EQ(back.genesis_time_ms, c.genesis_time_ms);
  ASSERT_EQ(back.validators.size(), 2u);
  EXPECT_EQ(back.validators[1].public_key, c.validators[1].public_key);
  ASSERT_EQ(back.identities.size(), 3u);
  EXPECT_EQ(back.identities[2].linked_patient_id, std::optional<std::string>("1"));
  EXPECT_EQ(back.listen_host, "0.0.0.0");
  EXPECT_EQ(back.listen_port, 9001);
  EXPECT_EQ(back.tick_ms, c.tick_ms);
  EXPECT_EQ(back.max_timeout_ticks, c.max_timeout_ticks);
}

TEST(NodeConfigTest, RelativePathsResolveAgainstConfigFile)
{
  TempDir    dir;
  NodeConfig c;
  c.validators = {{keygen_from_label("v").public_key, ""}};
  c.key_path   = "v.seed";
  c.data_dir   = "chain";
  std::ofstream(dir.path() / "node.json") << node_config_to_json(c);
  auto loaded = load_node_config(dir.path() / "node.json");
  EXPECT_EQ(loaded.key_path, dir.path() / "v.seed");
  EXPECT_EQ(loaded.data_dir, dir.path() / "chain");
}

TEST(NodeConfigTest, RejectsBadInput)
{
  EXPECT_THROW(node_config_from_json("{"), ConfigError);
  EXPECT_THROW(node_config_from_json(R"({"validators": []})"), ConfigError);
  auto key = keygen_from_label("v").public_key.hex();
  EXPECT_THROW(node_config_from_json(R"({"validators": [{"public_key": ")" + key +
                                     R"("}], "mode": "proof-of-stake"})"),
               ConfigError);
  EXPECT_THROW(node_config_from_json(R"({"validators": [{"public_key": ")" + key +
                                     R"("}], "listen_address": "nowhere"})"),
               ConfigError);
  EXPECT_THROW(load_node_config("/nonexistent/node.json"), ConfigError);
}

TEST(NodeTest, KeyOutsideValidatorSetIsRejected)
{
  NodeCluster cluster(1);
  EXPECT_THROW(Node(cluster.config, keygen_from_label("stranger")), ConfigError);
}

TEST(NodeTest, HealthNeedsNoAuthentication)
{
  NodeCluster cluster(1);
  ApiRequest  req{"GET", "/health", {}, {}, ""};
  auto        r = cluster.node(0).handle(req);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(body_of(r)["height"], 0);
  EXPECT_EQ(body_of(r)["validator_id"], cluster.validator_keys[0].id().hex());
}

TEST(NodeTest, UnknownActorGets401Everywhere)
{
  NodeCluster cluster(1);
  std::vector<std::pair<std::string, std::string>> routes{
      {"GET", "/patients"},         {"POST", "/patients"},       {"GET", "/patients/1"},
      {"PUT", "/patients/1"},       {"GET", "/explorer/txs"},    {"GET", "/explorer/tx/00"},
      {"GET", "/explorer/proof/00"}, {"GET", "/explorer/blocks/0"}, {"POST", "/admin/identities"},
      {"POST", "/admin/verify"},    {"POST", "/peer/message"},   {"GET", "/no/such/route"}};
  for (auto const &[method, path] : routes)
  {
    auto r = cluster.call(0, cluster.outsider, method, path, "{}");
    EXPECT_EQ(r.status, 401) << method << " " << path;
  }
}

TEST(NodeTest, AuthenticationFailuresAre401)
{
  NodeCluster cluster(1);
  auto        req = testing::signed_request(cluster.org, "GET", "/patients", "", cluster.now());
  EXPECT_EQ(cluster.node(0).handle(req).status, 200);

  auto missing = req;
  missing.headers.erase("x-signature");
  EXPECT_EQ(cluster.node(0).handle(missing).status, 401);

  auto forged           = req;
  forged.headers["x-signature"] =
      sign_payload(cluster.outsider.private_key, request_digest("", req.headers["x-timestamp"]).view())
          .hex();
  EXPECT_EQ(cluster.node(0).handle(forged).status, 401);

  auto altered = req;
  altered.body = "x";
  EXPECT_EQ(cluster.node(0).handle(altered).status, 401);

  auto now = cluster.now();
  EXPECT_EQ(cluster.call_at(0, cluster.org, "GET", "/patients", "", now - kReplayWindowMs - 1).status,
            401);
  EXPECT_EQ(cluster.call_at(0, cluster.org, "GET", "/patients", "", now + kReplayWindowMs + 1).status,
            401);
  EXPECT_EQ(cluster.call_at(0, cluster.org, "GET", "/patients", "", now - kReplayWindowMs).status,
            200);

  // a registered client is not a validator
  EXPECT_EQ(cluster.call(0, cluster.org, "POST", "/peer/message", "").status, 401);
}

TEST(NodeTest, CreateCommitsAndReadsBack)
{
  NodeCluster cluster(1);
  auto        r = cluster.submit_record(0, cluster.org, row(0));
  ASSERT_EQ(r.status, 202) << r.body;
  auto accepted = body_of(r);
  EXPECT_EQ(accepted["tx_hash"].get<std::string>().size(), 64u);
  EXPECT_TRUE(accepted["warnings"].empty());

  ASSERT_TRUE(cluster.settle_to(1));
  auto got = cluster.call(0, cluster.org, "GET", "/patients/1");
  ASSERT_EQ(got.status, 200) << got.body;
  auto j = body_of(got);
  EXPECT_EQ(j["name"], row(0).name);
  EXPECT_EQ(j["contact_no"], row(0).contact_no);
  ASSERT_EQ(j["provenance"].size(), 1u);
  EXPECT_EQ(j["provenance"][0], accepted["tx_hash"]);
  EXPECT_EQ(j["created_height"], 1);

  auto list = body_of(cluster.call(0, cluster.org, "GET", "/patients"));
  EXPECT_EQ(list["count"], 1);
  EXPECT_EQ(cluster.call(0, cluster.org, "GET", "/patients/2").status, 404);
}

TEST(NodeTest, UpdateAppendsProvenance)
{
  NodeCluster cluster(1);
  ASSERT_EQ(cluster.submit_record(0, cluster.org, row(0)).status, 202);
  ASSERT_TRUE(cluster.settle_to(1));
  auto updated   = row(0);
  updated.weight = "71";
  auto r         = cluster.submit_record(0, cluster.org, updated, OpKind::UpdateRecord);
  ASSERT_EQ(r.status, 202) << r.body;
  ASSERT_TRUE(cluster.settle_to(2));
  auto j = body_of(cluster.call(0, cluster.org, "GET", "/patients/1"));
  EXPECT_EQ(j["weight"], "71");
  ASSERT_EQ(j["provenance"].size(), 2u);
  EXPECT_EQ(j["provenance"][1], body_of(r)["tx_hash"]);
}

TEST(NodeTest, AdvisoryDateIsAcceptedWithWarning)
{
  NodeCluster cluster(1);
  auto        r = cluster.submit_record(0, cluster.org, row(4));
  ASSERT_EQ(r.status, 202) << r.body;
  auto warnings = body_of(r)["warnings"];
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0]["field"], "date_of_birth");
}

TEST(NodeTest, SubmissionErrors)
{
  NodeCluster cluster(1);
  auto        invalid = row(0);
  invalid.name.clear();
  auto r = cluster.submit_record(0, cluster.org, invalid);
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(body_of(r)["violations"][0]["field"], "name");

  EXPECT_EQ(cluster.submit_record(0, cluster.org, row(0), OpKind::UpdateRecord).status, 409);

  ASSERT_EQ(cluster.submit_record(0, cluster.org, row(0)).status, 202);
  ASSERT_TRUE(cluster.settle_to(1));
  EXPECT_EQ(cluster.submit_record(0, cluster.org, row(0)).status, 409);

  // same call twice: second is a duplicate transaction
  auto c = record_call(cluster.org, row(1), OpKind::CreateRecord, cluster.now());
  ApiRequest req{"POST", "/patients", {}, c.headers, c.body};
  EXPECT_EQ(cluster.node(0).handle(req).status, 202);
  EXPECT_EQ(cluster.node(0).handle(req).status, 409);

  auto bad_tx_sig                      = record_call(cluster.org, row(2), OpKind::CreateRecord, cluster.now());
  bad_tx_sig.headers["x-tx-signature"] = Signature{}.hex();
  EXPECT_EQ(cluster.node(0).handle({"POST", "/patients", {}, bad_tx_sig.headers, bad_tx_sig.body}).status,
            401);
  auto no_tx_sig = record_call(cluster.org, row(2), OpKind::CreateRecord, cluster.now());
  no_tx_sig.headers.erase("x-tx-signature");
  EXPECT_EQ(cluster.node(0).handle({"POST", "/patients", {}, no_tx_sig.headers, no_tx_sig.body}).status,
            401);

  EXPECT_EQ(cluster.call(0, cluster.org, "POST", "/patients", "{not json").status, 400);
  EXPECT_EQ(cluster.call(0, cluster.org, "POST", "/patients", R"({"colour": "red"})").status, 400);
  EXPECT_EQ(cluster.call(0, cluster.org, "GET", "/nowhere").status, 404);
  EXPECT_EQ(cluster.call(0, cluster.org, "DELETE", "/patients/1").status, 404);

  auto moved       = row(0);
  moved.patient_id = "2";
  auto mismatch    = record_call(cluster.org, moved, OpKind::UpdateRecord, cluster.now());
  auto resp = cluster.node(0).handle({"PUT", "/patients/1", {}, mismatch.headers, mismatch.body});
  EXPECT_EQ(resp.status, 422);
  EXPECT_EQ(body_of(resp)["violations"][0]["rule"], "path-mismatch");
}

TEST(NodeTest, PatientAccess)
{
  NodeCluster cluster(1);
  ASSERT_EQ(cluster.submit_record(0, cluster.org, row(0)).status, 202);
  ASSERT_EQ(cluster.submit_record(0, cluster.org, row(1)).status, 202);
  ASSERT_TRUE(cluster.settle_to(1));
  cluster.settle_to(2, 200);

  auto denied = cluster.submit_record(0, cluster.patient, row(2));
  EXPECT_EQ(denied.status, 403);
  EXPECT_EQ(body_of(denied)["rule"], "patient:not-permitted");

  EXPECT_EQ(cluster.call(0, cluster.patient, "GET", "/patients/1").status, 200);
  auto other = cluster.call(0, cluster.patient, "GET", "/patients/2");
  EXPECT_EQ(other.status, 403);
  EXPECT_EQ(body_of(other)["rule"], "patient:link-mismatch");

  auto list = body_of(cluster.call(0, cluster.patient, "GET", "/patients"));
  ASSERT_EQ(list["count"], 1);
  EXPECT_EQ(list["records"][0]["patient_id"], "1");

  auto page = body_of(cluster.call(0, cluster.patient, "GET", "/explorer/txs"));
  EXPECT_EQ(page["total"], 1);
  EXPECT_EQ(page["rows"][0]["to"], "1");
  auto org_page = body_of(cluster.call(0, cluster.org, "GET", "/explorer/txs"));
  EXPECT_EQ(org_page["total"], 2);

  std::string foreign_tx;
  for (auto const &r : org_page["rows"])
  {
    if (r["to"] == "2")
    {
      foreign_tx = r["txn_hash"];
    }
  }
  EXPECT_EQ(cluster.call(0, cluster.patient, "GET", "/explorer/tx/" + foreign_tx).status, 403);
  EXPECT_EQ(cluster.call(0, cluster.patient, "GET", "/explorer/proof/" + foreign_tx).status, 403);

  auto own      = row(0);
  own.weight    = "70";
  auto update   = cluster.submit_record(0, cluster.patient, own, OpKind::UpdateRecord);
  EXPECT_EQ(update.status, 202) << update.body;
  auto foreign  = row(1);
  foreign.weight = "1";
  EXPECT_EQ(cluster.submit_record(0, cluster.patient, foreign, OpKind::UpdateRecord).status, 403);
  EXPECT_EQ(cluster.call(0, cluster.patient, "POST", "/admin/verify").status, 403);
}

TEST(NodeTest, ExplorerRowsAndProofs)
{
  NodeCluster cluster(1);
  std::vector<std::string> hashes;
  for (std::size_t i = 0; i < 3; ++i)
  {
    auto r = cluster.submit_record(0, cluster.org, row(i));
    ASSERT_EQ(r.status, 202);
    hashes.push_back(body_of(r)["tx_hash"]);
  }
  ASSERT_TRUE(cluster.settle_to(1));
  cluster.settle_to(3, 500);

  auto page = body_of(cluster.call(0, cluster.org, "GET", "/explorer/txs?page=1"));
  EXPECT_EQ(page["page"], 1);
  EXPECT_EQ(page["page_size"], kExplorerPageSize);
  ASSERT_EQ(page["total"], 3);
  // newest first
  EXPECT_EQ(page["rows"][0]["txn_hash"], hashes[2]);
  EXPECT_EQ(page["rows"][2]["txn_hash"], hashes[0]);
  for (auto const &r : page["rows"])
  {
    EXPECT_EQ(r["method"], "CreateRecord");
    EXPECT_EQ(r["value"], "0");
    EXPECT_EQ(r["txn_fee"], "0");
    EXPECT_EQ(r["from"], cluster.org.id().hex());
    EXPECT_GE(r["block"].get<int>(), 1);
  }
  EXPECT_TRUE(body_of(cluster.call(0, cluster.org, "GET", "/explorer/txs?page=2"))["rows"].empty());
  EXPECT_EQ(cluster.call(0, cluster.org, "GET", "/explorer/txs?page=0").status, 400);

  auto tx = body_of(cluster.call(0, cluster.org, "GET", "/explorer/tx/" + hashes[1]));
  EXPECT_EQ(tx["to"], row(1).patient_id);
  EXPECT_EQ(cluster.call(0, cluster.org, "GET", "/explorer/tx/" + std::string(64, 'a')).status, 404);
  EXPECT_EQ(cluster.call(0, cluster.org, "GET", "/explorer/tx/zz").status, 404);

  for (auto const &h : hashes)
  {
    auto proof = body_of(cluster.call(0, cluster.org, "GET", "/explorer/proof/" + h));
    merkle::MerkleProof p;
    p.leaf_index = proof["index"];
    for (auto const &s : proof["siblings"])
    {
      p.siblings.push_back({Hash32::from_hex(s["hash"].get<std::string>()),
                            s["side"] == "left" ? merkle::Side::Left : merkle::Side::Right});
    }
    auto root  = Hash32::from_hex(proof["body_root"].get<std::string>());
    auto leaf  = from_hex(proof["leaf"].get<std::string>());
    EXPECT_TRUE(merkle::verify_proof(root, leaf, p));
    EXPECT_EQ(decode_transaction(leaf).tx_hash.hex(), h);

    auto block = body_of(cluster.call(0, cluster.org, "GET",
                                      "/explorer/blocks/" + std::to_string(proof["block"].get<int>()) +
                                          "?tx=" + h));
    EXPECT_EQ(block["body_root"], proof["body_root"]);
    EXPECT_EQ(block["proof"]["siblings"], proof["siblings"]);
    EXPECT_EQ(block["commit_signature_count"], 1);
  }
  auto genesis = body_of(cluster.call(0, cluster.org, "GET", "/explorer/blocks/0"));
  EXPECT_EQ(genesis["height"], 0);
  EXPECT_EQ(cluster.call(0, cluster.org, "GET", "/explorer/blocks/99").status, 404);
  EXPECT_EQ(cluster.call(0, cluster.org, "GET", "/explorer/blocks/x").status, 400);
}

TEST(NodeTest, RegistrationFlow)
{
  NodeCluster cluster(1);
  auto        doctor   = keygen_from_label("new-doctor");
  auto        identity = StakeholderIdentity::make(doctor.public_key, Role::Organizational);

  auto by_org = registration_call(cluster.org, identity, cluster.now());
  auto denied = cluster.node(0).handle({"POST", "/admin/identities", {}, by_org.headers, by_org.body});
  EXPECT_EQ(denied.status, 403);
  EXPECT_EQ(body_of(denied)["rule"], "organizational:no-identity-admin");

  EXPECT_EQ(cluster.submit_record(0, doctor, row(0)).status, 401);

  auto call = registration_call(cluster.admin, identity, cluster.now());
  auto r    = cluster.node(0).handle({"POST", "/admin/identities", {}, call.headers, call.body});
  ASSERT_EQ(r.status, 202) << r.body;
  EXPECT_EQ(body_of(r)["tx_hash"], call.tx_hash.hex());
  EXPECT_EQ(body_of(r)["identity_id"], doctor.id().hex());
  ASSERT_TRUE(cluster.settle_to(1));
  EXPECT_EQ(cluster.node(0).registry().find(doctor.id())->identity.role, Role::Organizational);
  EXPECT_EQ(cluster.submit_record(0, doctor, row(0)).status, 202);

  cluster.advance(1);
  auto again     = registration_call(cluster.admin, identity, cluster.now());
  auto duplicate = cluster.node(0).handle({"POST", "/admin/identities", {}, again.headers, again.body});
  EXPECT_EQ(duplicate.status, 409);

  auto unlinked = StakeholderIdentity::make(keygen_from_label("p9").public_key, Role::Patient);
  auto missing  = registration_call(cluster.admin, unlinked, cluster.now());
  EXPECT_EQ(cluster.node(0).handle({"POST", "/admin/identities", {}, missing.headers, missing.body}).status,
            422);

  auto forged  = registration_call(cluster.admin, StakeholderIdentity::make(keygen_from_label("x").public_key,
                                                                            Role::Organizational),
                                   cluster.now());
  auto body    = json::parse(forged.body);
  body["role"] = "Admin";  // admin signature no longer matches
  forged.body  = body.dump();
  forged.headers = sign_request(cluster.admin, forged.body, cluster.now());
  EXPECT_EQ(cluster.node(0).handle({"POST", "/admin/identities", {}, forged.headers, forged.body}).status,
            422);
}

TEST(NodeTest, FourValidatorsAgree)
{
  NodeCluster cluster(4);
  for (std::size_t i = 0; i < 6; ++i)
  {
    ASSERT_EQ(cluster.submit_record(i % 4, cluster.org, row(i)).status, 202);
  }
  ASSERT_TRUE(cluster.settle_to(1));
  for (int i = 0; i < 200; ++i)
  {
    cluster.advance(cluster.config.tick_ms);
  }
  auto tip = cluster.node(0).tip_hash();
  for (std::size_t i = 0; i < 4; ++i)
  {
    EXPECT_EQ(cluster.node(i).tip_hash(), tip) << i;
    EXPECT_EQ(cluster.node(i).pool_size(), 0u) << i;
    EXPECT_EQ(body_of(cluster.call(i, cluster.org, "GET", "/patients"))["count"], 6) << i;
  }
  auto block = body_of(cluster.call(2, cluster.org, "GET", "/explorer/blocks/1"));
  EXPECT_GE(block["commit_signature_count"].get<int>(), 3);
}

TEST(NodeTest, CommitsWithOneValidatorDown)
{
  NodeCluster cluster(4);
  cluster.set_down(1, true);
  ASSERT_EQ(cluster.submit_record(0, cluster.org, row(0)).status, 202);
  ASSERT_TRUE(cluster.settle_to(1));
  EXPECT_EQ(cluster.node(1).height(), 0u);

  cluster.set_down(1, false);
  ASSERT_TRUE(cluster.settle_to(1, 20'000));
  EXPECT_EQ(cluster.node(1).tip_hash(), cluster.node(0).tip_hash());
}

TEST(NodeTest, NoCommitWithoutQuorum)
{
  NodeCluster cluster(4);
  cluster.set_down(2, true);
  cluster.set_down(3, true);
  ASSERT_EQ(cluster.submit_record(0, cluster.org, row(0)).status, 202);
  EXPECT_FALSE(cluster.settle_to(1, 3000));
  EXPECT_EQ(cluster.node(0).height(), 0u);
  EXPECT_EQ(cluster.node(1).height(), 0u);
}

TEST(NodeTest, RestartAndVerifyAfterTamper)
{
  TempDir     dir;
  NodeCluster cluster(1, dir.path());
  for (std::size_t i = 0; i < 5; ++i)
  {
    ASSERT_EQ(cluster.submit_record(0, cluster.org, row(i)).status, 202);
    ASSERT_TRUE(cluster.settle_to(i + 1));
  }
  auto tip = cluster.node(0).tip_hash();
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "node0" / "chain.json"));

  cluster.restart(0);
  EXPECT_EQ(cluster.node(0).height(), 5u);
  EXPECT_EQ(cluster.node(0).tip_hash(), tip);
  EXPECT_EQ(body_of(cluster.call(0, cluster.org, "GET", "/patients"))["count"], 5);

  auto ok = body_of(cluster.call(0, cluster.admin, "POST", "/admin/verify"));
  EXPECT_TRUE(ok["ok"]);
  EXPECT_EQ(ok["height"], 5);
  EXPECT_TRUE(ok["failed_height"].is_null());
  EXPECT_EQ(cluster.call(0, cluster.org, "POST", "/admin/verify").status, 403);

  tamper_log(block_log_path(dir.path() / "node0"), 3, kHeaderSize + 4 + 4 + 10);
  auto bad = body_of(cluster.call(0, cluster.admin, "POST", "/admin/verify"));
  EXPECT_FALSE(bad["ok"]);
  EXPECT_EQ(bad["failed_height"], 3);
  EXPECT_THROW(cluster.restart(0), StorageError);
}

TEST(NodeTest, ForeignDataDirectoryIsRejected)
{
  TempDir dir;
  {
    NodeCluster cluster(1, dir.path());
  }
  // a different validator set pointed at the same directory
  EXPECT_THROW(NodeCluster(2, dir.path()), ConfigError);
}

TEST(NodeTest, DescriptorRoundTrip)
{
  TempDir     dir;
  NodeCluster cluster(3);
  auto        d = descriptor_of(cluster.config);
  write_descriptor(dir.path(), d);
  auto back = read_descriptor(dir.path());
  EXPECT_EQ(back.genesis_hash, d.genesis_hash);
  EXPECT_EQ(back.validators, d.validators);
  EXPECT_EQ(back.identities.size(), 3u);

  auto text = read_file(descriptor_path(dir.path()));
  auto j    = json::parse(std::string(text.begin(), text.end()));
  j["genesis_time_ms"] = 5;
  std::ofstream(descriptor_path(dir.path()), std::ios::trunc) << j.dump();
  EXPECT_THROW(read_descriptor(dir.path()), StorageError);
}

TEST(NodeServerTest, ServesOverHttp)
{
  NodeCluster cluster(1);
  NodeServer  server(cluster.node(0));
  auto        port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto             call = record_call(cluster.org, row(0), OpKind::CreateRecord, cluster.now());
  httplib::Headers headers;
  for (auto const &[k, v] : call.headers)
  {
    headers.emplace(k, v);
  }
  auto posted = client.Post("/patients", headers, call.body, "application/json");
  ASSERT_TRUE(posted);
  EXPECT_EQ(posted->status, 202) << posted->body;

  auto unsigned_get = client.Get("/patients");
  ASSERT_TRUE(unsigned_get);
  EXPECT_EQ(unsigned_get->status, 401);
  server.stop();
}

}  // namespace
}  // namespace ledgerehr
