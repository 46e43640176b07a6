#include <gtest/gtest.h>

#include <cstdlib>

#include "support.hpp"

using namespace esisig;
using testing_support::blob_of;
using testing_support::FakeSigner;

TEST(Digest, EmptyInputConstants) {
  EXPECT_EQ(digest("", "sha1"), "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  EXPECT_EQ(digest("", "md5"), "d41d8cd98f00b204e9800998ecf8427e");
  EXPECT_EQ(digest("", "sha256"), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Digest, UnknownAlgorithm) {
  EXPECT_THROW(digest("x", "sha512"), UnsupportedAlgorithm);
  EXPECT_THROW(digest("x", "SHA1"), UnsupportedAlgorithm);
}

TEST(Digest, IncrementalMatchesOneShot) {
  DigestSet set({kDigestAlgorithms.begin(), kDigestAlgorithms.end()});
  const std::string blob = testing_support::kNamespacedBlob;
  for (std::size_t i = 0; i < blob.size(); i += 7) set.update(std::string_view(blob).substr(i, 7));
  for (auto algorithm : kDigestAlgorithms) {
    EXPECT_EQ(*set.hex(algorithm), digest(blob, algorithm_token(algorithm)));
  }
}

TEST(Digest, MatchesExternalTool) {
  if (!testing_support::have_program("openssl")) GTEST_SKIP() << "openssl not installed";
  testing_support::TempDir dir;
  const std::pair<std::string, std::string> files[] = {{"sample.norm", testing_support::kNamespacedBlob},
                                                       {"a.norm", "(a\r\n)a\r\n"}};
  for (const auto& [name, bytes] : files) {
    testing_support::write_file(dir / name, bytes);
    for (const char* alg : {"md5", "sha1", "sha256"}) {
      EXPECT_EQ(digest(bytes, alg), testing_support::openssl_digest(dir / name, alg)) << name << " " << alg;
    }
  }
}

TEST(SignaturePI, DefaultTarget) {
  const auto pi = parse_signature_pi("algorithm='sha1' content='da39a3ee5e6b4b0d3255bfef95601890afd80709'");
  EXPECT_EQ(pi.algorithm, "sha1");
  EXPECT_EQ(pi.content, "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  EXPECT_EQ(pi.target, SignatureTarget::whole_document);
}

TEST(SignaturePI, TargetsAndQuotes) {
  EXPECT_EQ(parse_signature_pi("algorithm=\"md5\" content=\"x\" target=\"/\"").target, SignatureTarget::whole_document);
  EXPECT_EQ(parse_signature_pi("algorithm='md5'\n content = 'x'\ttarget='following::*[1]'").target,
            SignatureTarget::following_element);
}

TEST(SignaturePI, ArmorAlias) {
  const auto pi = parse_signature_pi(
      "armor='-----BEGIN PGP SIGNATURE-----\nABC123....\n-----END PGP SIGNATURE-----'");
  EXPECT_EQ(pi.algorithm, "pgp");
  EXPECT_EQ(pi.content, "-----BEGIN PGP SIGNATURE-----\nABC123....\n-----END PGP SIGNATURE-----");
  EXPECT_EQ(pi.target, SignatureTarget::whole_document);
}

TEST(SignaturePI, UnknownKeysIgnored) {
  const auto pi = parse_signature_pi("algorithm='sha1' content='x' signer='someone'");
  EXPECT_EQ(pi.content, "x");
}

TEST(SignaturePI, Malformed) {
  const char* bad[] = {
      "algorithm='sha1' content='x' target='ancestor::*'",
      "algorithm='sha1' content='x",
      "algorithm=sha1 content='x'",
      "algorithm='sha1' algorithm='md5' content='x'",
      "algorithm='sha1'",
      "content='x'",
      "armor='a' content='b'",
      "algorithm='sha1' content='x' junk",
  };
  for (const char* data : bad) EXPECT_THROW(parse_signature_pi(data), MalformedPIError) << data;
}

TEST(SignaturePI, FormatAndQuoteSelection) {
  SignaturePI pi;
  pi.algorithm = "sha1";
  pi.content = "abc";
  EXPECT_EQ(format_signature_pi(pi), "<?signature algorithm='sha1' content='abc'?>");
  pi.target = SignatureTarget::following_element;
  EXPECT_EQ(format_signature_pi(pi), "<?signature algorithm='sha1' content='abc' target='following::*[1]'?>");
  EXPECT_EQ(quote_pi_value("it's"), "\"it's\"");
  EXPECT_THROW(quote_pi_value("'\""), SigningError);
  EXPECT_EQ(parse_signature_pi(signature_pi_data(pi)), pi);
}

TEST(SignDocument, RoundTripAndPlacement) {
  const std::string& xml = testing_support::kPlainXml;
  const auto at_end = sign_document(xml, "sha1", nullptr, Placement::at_end);
  EXPECT_NE(at_end.find("<?signature algorithm='sha1' content='" + digest(testing_support::kPlainBlob, "sha1") +
                        "'?></doc>"),
            std::string::npos);
  EXPECT_EQ(blob_of(at_end), testing_support::kPlainBlob);
  EXPECT_TRUE(verify_document(at_end).all_verified());

  const auto at_start = sign_document(xml, "sha1", nullptr, Placement::at_start);
  EXPECT_TRUE(at_start.starts_with("<doc><?signature "));
  EXPECT_TRUE(verify_document(at_start).all_verified());
}

TEST(SignDocument, TamperingIsDetected) {
  auto signed_xml = sign_document(testing_support::kPlainXml, "sha256", nullptr);
  signed_xml.replace(signed_xml.find("Hello"), 5, "Hellp");
  const auto report = verify_document(signed_xml);
  ASSERT_EQ(report.entries.size(), 1u);
  EXPECT_EQ(report.entries[0].status, VerificationStatus::failed);
  EXPECT_FALSE(report.all_verified());
}

TEST(SignDocument, ResigningIgnoresExistingSignature) {
  const auto once = sign_document(testing_support::kPlainXml, "md5", nullptr);
  const auto twice = sign_document(once, "md5", nullptr, Placement::at_start);
  const auto report = verify_document(twice);
  ASSERT_EQ(report.entries.size(), 2u);
  EXPECT_TRUE(report.all_verified());
  const auto first = testing_support::first_signature(twice);
  EXPECT_EQ(first.content, digest(testing_support::kPlainBlob, "md5"));
}

TEST(SignDocument, EmptyRootAndEncodings) {
  const auto empty = sign_document("<?xml version='1.0'?>\n<r a='1'/>\n", "sha1", nullptr);
  EXPECT_NE(empty.find("<r a='1'><?signature "), std::string::npos);
  EXPECT_NE(empty.find("?></r>\n"), std::string::npos);
  EXPECT_TRUE(verify_document(empty).all_verified());

  const std::string utf8 = "<?xml version='1.0' encoding='UTF-16'?><r>caf\xC3\xA9</r>";
  const std::string utf16 = "\xFF\xFE" + unicode::utf8_to_utf16(utf8, true);
  const auto signed16 = sign_document(utf16, "sha1", nullptr, Placement::at_start);
  EXPECT_TRUE(verify_document(signed16).all_verified());
  EXPECT_EQ(blob_of(signed16), blob_of("<r>caf\xC3\xA9</r>"));

  const std::string latin1 = "<?xml version='1.0' encoding='ISO-8859-1'?><r>caf\xE9</r>";
  const auto signed1 = sign_document(latin1, "sha256", nullptr);
  EXPECT_TRUE(verify_document(signed1).all_verified());
}

TEST(SignDocument, FollowingElement) {
  const std::string xml = "<r><a>one</a><b>two</b></r>";
  const auto signed_xml = sign_document(xml, "sha1", nullptr, Placement::at_start, SignatureTarget::following_element);
  EXPECT_NE(signed_xml.find("target='following::*[1]'?><a>"), std::string::npos);
  EXPECT_EQ(testing_support::first_signature(signed_xml).content,
            digest("(a\r\n-one\r\n)a\r\n", "sha1"));
  EXPECT_TRUE(verify_document(signed_xml).all_verified());

  auto outside = signed_xml;
  outside.replace(outside.find("two"), 3, "TWO");
  EXPECT_TRUE(verify_document(outside).all_verified()) << "changes outside the target do not matter";
  auto inside = signed_xml;
  inside.replace(inside.find("one"), 3, "ONE");
  EXPECT_EQ(verify_document(inside).entries.at(0).status, VerificationStatus::failed);

  EXPECT_THROW(sign_document(xml, "sha1", nullptr, Placement::at_end, SignatureTarget::following_element),
               SigningError);
  EXPECT_THROW(sign_document("<r>text</r>", "sha1", nullptr, Placement::at_start, SignatureTarget::following_element),
               SigningError);
}

TEST(SignDocument, Errors) {
  EXPECT_THROW(sign_document("<a/>", "sha512", nullptr), UnsupportedAlgorithm);
  EXPECT_THROW(sign_document("<a/>", "pgp", nullptr), SigningError);
  EXPECT_THROW(sign_document("<a>", "sha1", nullptr), WellFormednessError);
}

TEST(VerifyDocument, Statuses) {
  const auto report = verify_document(
      "<r><?signature algorithm='sha512' content='00'?>"
      "<?signature algorithm='sha1' content='x' target='nowhere'?>"
      "<?signature algorithm='pgp' content='-----BEGIN PGP SIGNATURE-----'?>"
      "<a/><?signature algorithm='md5' content='00' target='following::*[1]'?></r>");
  ASSERT_EQ(report.entries.size(), 4u);
  EXPECT_EQ(report.entries[0].status, VerificationStatus::unsupported_algorithm);
  EXPECT_EQ(report.entries[1].status, VerificationStatus::malformed);
  EXPECT_EQ(report.entries[2].status, VerificationStatus::no_signer);
  EXPECT_EQ(report.entries[3].status, VerificationStatus::malformed) << "nothing follows";
  EXPECT_TRUE(verify_document("<a/>").entries.empty());
  EXPECT_FALSE(verify_document("<a/>").all_verified());
}

TEST(VerifyDocument, DigestCaseInsensitive) {
  const auto signed_xml = sign_document("<a>x</a>", "sha1", nullptr);
  std::string upper = signed_xml;
  const auto at = upper.find("content='") + 9;
  for (std::size_t i = at; upper[i] != '\''; ++i) upper[i] = static_cast<char>(std::toupper(upper[i]));
  EXPECT_TRUE(verify_document(upper).all_verified());
}

TEST(SignDocument, FakeSignerRoundTrip) {
  FakeSigner signer;
  const auto signed_xml = sign_document(testing_support::kPlainXml, "pgp", &signer);
  EXPECT_NE(signed_xml.find("algorithm='pgp' content='-----BEGIN PGP SIGNATURE-----"), std::string::npos);
  EXPECT_TRUE(verify_document(signed_xml, &signer).all_verified());
  auto tampered = signed_xml;
  tampered.replace(tampered.find("chum"), 4, "chump");
  EXPECT_EQ(verify_document(tampered, &signer).entries.at(0).status, VerificationStatus::failed);
  EXPECT_EQ(verify_document(signed_xml).entries.at(0).status, VerificationStatus::no_signer);
}

namespace {

// Creates a throwaway keyring; skips when gpg is unavailable.
class GpgFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!testing_support::have_program("gpg")) GTEST_SKIP() << "gpg not installed";
    const auto r = testing_support::run({"gpg", "--batch", "--homedir", dir_.path().string(), "--passphrase", "",
                                         "--quick-generate-key", "Esisig Test <test@example.org>", "ed25519",
                                         "sign", "never"});
    if (r.exit_code != 0) GTEST_SKIP() << "cannot create a test key: " << r.err;
    options_.homedir = dir_.path().string();
  }

  testing_support::TempDir dir_;
  GpgOptions options_;
};

}  // namespace

TEST_F(GpgFixture, SignAndVerify) {
  GpgSigner signer(options_);
  const auto signed_xml = sign_document(testing_support::kPlainXml, "pgp", &signer);
  EXPECT_NE(signed_xml.find("-----BEGIN PGP SIGNATURE-----"), std::string::npos);
  EXPECT_TRUE(verify_document(signed_xml, &signer).all_verified());

  auto tampered = signed_xml;
  tampered.replace(tampered.find("there"), 5, "where");
  const auto report = verify_document(tampered, &signer);
  EXPECT_EQ(report.entries.at(0).status, VerificationStatus::failed);
  EXPECT_FALSE(report.entries.at(0).diagnostic.empty());
}

TEST_F(GpgFixture, DetachedSignatureOverNormFile) {
  // The signature in the document is an ordinary detached signature over
  // the normalized bytes, checkable with gpg --verify file.sig file.norm.
  GpgSigner signer(options_);
  const auto signed_xml = sign_document(testing_support::kNamespacedXml, "pgp", &signer);
  const auto pi = testing_support::first_signature(signed_xml);
  testing_support::write_file(dir_ / "file.norm", testing_support::kNamespacedBlob);
  testing_support::write_file(dir_ / "file.sig", pi.content);
  const auto r = testing_support::run({"gpg", "--batch", "--homedir", dir_.path().string(), "--verify",
                                       (dir_ / "file.sig").string(), (dir_ / "file.norm").string()});
  EXPECT_EQ(r.exit_code, 0) << r.err;
}

TEST(GpgSigner, MissingExecutable) {
  GpgSigner signer(GpgOptions{"/nonexistent/gpg", std::nullopt, std::nullopt});
  EXPECT_THROW(signer.sign("x"), SignerFailure);
  EXPECT_FALSE(signer.verify("x", "y").valid);
}
