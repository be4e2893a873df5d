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

#include "support/fixtures.hpp"

#include "ledgerehr/identity.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace ledgerehr;

namespace {

struct RegistryFixture : ::testing::Test
{
  KeyPair admin   = keygen_from_label("admin");
  KeyPair org     = keygen_from_label("org");
  KeyPair patient = keygen_from_label("patient-7");
  KeyPair rep     = keygen_from_label("patient-7-rep");
  KeyPair other   = keygen_from_label("patient-3");

  Registry base = Registry::bootstrap({StakeholderIdentity::make(admin.public_key, Role::Admin)});

  Registry enrol(Registry const &reg, StakeholderIdentity const &id) const
  {
    return register_stakeholder(reg, id, admin.id(),
                                sign_payload(admin.private_key, encode_identity(id)));
  }

  Registry full() const
  {
    auto reg = enrol(base, StakeholderIdentity::make(org.public_key, Role::Organizational));
    reg      = enrol(reg, StakeholderIdentity::make(patient.public_key, Role::Patient, "7"));
    reg      = enrol(reg, StakeholderIdentity::make(rep.public_key, Role::Patient, "7"));
    return enrol(reg, StakeholderIdentity::make(other.public_key, Role::Patient, "3"));
  }
};

}  // namespace

TEST(KeyTest, SeededKeygenIsDeterministic)
{
  Seed seed{};
  seed[0] = 42;
  auto a  = keygen(seed);
  auto b  = keygen(seed);
  EXPECT_EQ(a.public_key, b.public_key);
  EXPECT_EQ(a.private_key.seed(), seed);
}

TEST(KeyTest, RandomKeysDiffer)
{
  EXPECT_NE(keygen().public_key, keygen().public_key);
}

// RFC 8032 section 7.1, test 1.
TEST(KeyTest, Rfc8032Vector)
{
  auto  seed_bytes = from_hex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60");
  Seed  seed;
  std::copy(seed_bytes.begin(), seed_bytes.end(), seed.begin());
  auto kp = keygen(seed);
  EXPECT_EQ(kp.public_key.hex(), "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
  auto sig = sign_payload(kp.private_key, ByteView{});
  EXPECT_EQ(sig.hex(),
            "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
            "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");
}

TEST(KeyTest, SignVerify)
{
  auto kp  = keygen_from_label("k");
  auto sig = sign_payload(kp.private_key, as_bytes("x"));
  EXPECT_TRUE(verify_payload(kp.public_key, as_bytes("x"), sig));
  EXPECT_FALSE(verify_payload(kp.public_key, as_bytes("y"), sig));
  EXPECT_FALSE(verify_payload(keygen_from_label("j").public_key, as_bytes("x"), sig));
  auto flipped = sig;
  flipped.bytes[0] ^= 1;
  EXPECT_FALSE(verify_payload(kp.public_key, as_bytes("x"), flipped));
}

TEST(KeyTest, IdentityIsTruncatedKeyHash)
{
  auto kp     = keygen_from_label("k");
  auto digest = sha256(kp.public_key.view());
  EXPECT_EQ(kp.id().hex(), digest.hex().substr(0, 32));
}

TEST(KeyTest, SeedFileRoundTrip)
{
  ledgerehr::testing::TempDir dir;
  auto             kp   = keygen_from_label("file");
  auto             path = dir.path() / "k.seed";
  write_seed_file(path, kp.private_key.seed());
  EXPECT_EQ(keygen(read_seed_file(path)).public_key, kp.public_key);

  std::ofstream(dir.path() / "bad.seed") << "nothex\n";
  EXPECT_THROW(read_seed_file(dir.path() / "bad.seed"), KeyError);
}

TEST(KeyTest, CachesAgreeWithDirectCalls)
{
  auto        kp = keygen_from_label("cache");
  SignCache   signer;
  VerifyCache verifier;
  auto        sig = signer.sign(kp.private_key, as_bytes("m"));
  EXPECT_EQ(sig, sign_payload(kp.private_key, as_bytes("m")));
  EXPECT_EQ(signer.sign(kp.private_key, as_bytes("m")), sig);
  EXPECT_TRUE(verifier.verify(kp.public_key, as_bytes("m"), sig));
  EXPECT_TRUE(verifier.verify(kp.public_key, as_bytes("m"), sig));
  EXPECT_EQ(verifier.hits(), 1u);
  EXPECT_FALSE(verifier.verify(kp.public_key, as_bytes("n"), sig));
}

TEST(IdentityCodecTest, RoundTrip)
{
  auto kp = keygen_from_label("p");
  for (auto const &id : {StakeholderIdentity::make(kp.public_key, Role::Patient, "7", 99),
                         StakeholderIdentity::make(kp.public_key, Role::Organizational)})
  {
    EXPECT_EQ(decode_identity(encode_identity(id)), id);
  }
  auto bytes = encode_identity(StakeholderIdentity::make(kp.public_key, Role::Admin));
  bytes[48]  = 9;  // role byte
  EXPECT_THROW(decode_identity(bytes), DecodeError);
}

TEST_F(RegistryFixture, AdminRegistersOrganizational)
{
  auto reg = enrol(base, StakeholderIdentity::make(org.public_key, Role::Organizational));
  ASSERT_NE(reg.find(org.id()), nullptr);
  EXPECT_EQ(reg.find(org.id())->identity.role, Role::Organizational);
  EXPECT_EQ(base.size(), 1u);
}

TEST_F(RegistryFixture, NonAdminSignatureRejected)
{
  auto reg = enrol(base, StakeholderIdentity::make(org.public_key, Role::Organizational));
  auto id  = StakeholderIdentity::make(patient.public_key, Role::Patient, "7");
  try
  {
    register_stakeholder(reg, id, org.id(), sign_payload(org.private_key, encode_identity(id)));
    FAIL() << "expected RegistryError";
  }
  catch (RegistryError const &e)
  {
    EXPECT_EQ(e.kind(), RegistryError::Kind::BadAdminSignature);
  }
}

TEST_F(RegistryFixture, ForgedAdminSignatureRejected)
{
  auto id = StakeholderIdentity::make(org.public_key, Role::Organizational);
  auto sig = sign_payload(org.private_key, encode_identity(id));
  try
  {
    register_stakeholder(base, id, admin.id(), sig);
    FAIL() << "expected RegistryError";
  }
  catch (RegistryError const &e)
  {
    EXPECT_EQ(e.kind(), RegistryError::Kind::BadAdminSignature);
  }
}

TEST_F(RegistryFixture, PatientNeedsLink)
{
  try
  {
    enrol(base, StakeholderIdentity::make(patient.public_key, Role::Patient));
    FAIL() << "expected RegistryError";
  }
  catch (RegistryError const &e)
  {
    EXPECT_EQ(e.kind(), RegistryError::Kind::MissingPatientLink);
  }
}

TEST_F(RegistryFixture, DuplicateRejected)
{
  auto id  = StakeholderIdentity::make(org.public_key, Role::Organizational);
  auto reg = enrol(base, id);
  try
  {
    enrol(reg, id);
    FAIL() << "expected RegistryError";
  }
  catch (RegistryError const &e)
  {
    EXPECT_EQ(e.kind(), RegistryError::Kind::DuplicateIdentity);
  }
}

TEST_F(RegistryFixture, AppendOnlyEncoding)
{
  auto        reg  = base;
  std::size_t last = reg.encode().size();
  for (auto const *kp : {&org, &patient, &rep})
  {
    auto role = kp == &org ? Role::Organizational : Role::Patient;
    auto link = kp == &org ? std::optional<std::string>{} : std::optional<std::string>{"7"};
    reg       = enrol(reg, StakeholderIdentity::make(kp->public_key, role, link));
    EXPECT_GE(reg.encode().size(), last);
    last = reg.encode().size();
  }
  reg = revoke_stakeholder(reg, rep.id(), admin.id(),
                           sign_payload(admin.private_key, revocation_message(rep.id())));
  EXPECT_GE(reg.encode().size(), last);
  EXPECT_FALSE(reg.is_active(rep.id()));
  EXPECT_NE(reg.find(rep.id()), nullptr);
}

TEST_F(RegistryFixture, PolicyExamples)
{
  auto reg = full();
  EXPECT_TRUE(authorize(reg, org.id(), Action::AddRecord).allowed);
  auto d = authorize(reg, patient.id(), Action::ReadRecord, "3");
  EXPECT_FALSE(d.allowed);
  EXPECT_EQ(d.rule, "patient:link-mismatch");
  auto u = authorize(reg, keygen_from_label("stranger").id(), Action::ReadChain);
  EXPECT_FALSE(u.allowed);
  EXPECT_EQ(u.rule, "unregistered");
}

TEST_F(RegistryFixture, RepresentativeSharesPatientAccess)
{
  auto reg = full();
  EXPECT_TRUE(authorize(reg, rep.id(), Action::ReadRecord, "7").allowed);
  EXPECT_TRUE(authorize(reg, rep.id(), Action::UpdateRecord, "7").allowed);
  EXPECT_FALSE(authorize(reg, rep.id(), Action::UpdateRecord, "3").allowed);
}

TEST_F(RegistryFixture, RevokedActorDenied)
{
  auto reg = full();
  reg      = revoke_stakeholder(reg, org.id(), admin.id(),
                                sign_payload(admin.private_key, revocation_message(org.id())));
  auto d   = authorize(reg, org.id(), Action::ReadRecord);
  EXPECT_FALSE(d.allowed);
  EXPECT_EQ(d.rule, "revoked");
}
