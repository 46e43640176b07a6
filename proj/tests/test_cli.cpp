#include <gtest/gtest.h>

#include "support.hpp"

using testing_support::run;
using testing_support::TempDir;
using testing_support::write_file;

namespace {

const std::string kCli = ESISIG_CLI_PATH;

}  // namespace

TEST(Cli, NormWritesExactBlob) {
  const auto r = run({kCli, "norm"}, testing_support::kNamespacedXml);
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(r.out, testing_support::kNamespacedBlob);
  EXPECT_TRUE(r.err.empty());
}

TEST(Cli, EsisWritesUnnormalizedForm) {
  TempDir dir;
  write_file(dir / "sample.xml", testing_support::kNamespacedXml);
  const auto r = run({kCli, "esis", (dir / "sample.xml").string()});
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out, testing_support::kNamespacedUnnormalized);
}

TEST(Cli, DigestMatchesExternalToolOverNormFile) {
  if (!testing_support::have_program("openssl")) GTEST_SKIP() << "openssl not installed";
  TempDir dir;
  write_file(dir / "file.xml", testing_support::kNamespacedXml);
  const auto norm = run({kCli, "norm", (dir / "file.xml").string()});
  write_file(dir / "file.norm", norm.out);
  for (const char* alg : {"md5", "sha1", "sha256"}) {
    const auto r = run({kCli, "digest", "--algorithm", alg, (dir / "file.xml").string()});
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.out, testing_support::openssl_digest(dir / "file.norm", alg) + "\n") << alg;
  }
}

TEST(Cli, SignVerifyAndTamper) {
  const auto signed_doc = run({kCli, "sign", "--algorithm", "sha1"}, testing_support::kPlainXml);
  ASSERT_EQ(signed_doc.exit_code, 0) << signed_doc.err;
  const auto ok = run({kCli, "verify"}, signed_doc.out);
  EXPECT_EQ(ok.exit_code, 0);
  EXPECT_EQ(ok.out, "document sha1 verified\n");
  auto tampered = signed_doc.out;
  tampered.replace(tampered.find("Hello"), 5, "Hellp");
  const auto bad = run({kCli, "verify"}, tampered);
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_TRUE(bad.out.starts_with("document sha1 failed"));
  EXPECT_EQ(run({kCli, "verify", "--batch"}, tampered).exit_code, 1);
}

TEST(Cli, SignFollowingTargetAtStart) {
  const auto signed_doc = run({kCli, "sign", "--target", "following", "-a", "sha256"}, "<r><a>x</a></r>");
  ASSERT_EQ(signed_doc.exit_code, 0) << signed_doc.err;
  EXPECT_TRUE(signed_doc.out.starts_with("<r><?signature algorithm='sha256'"));
  const auto r = run({kCli, "verify"}, signed_doc.out);
  EXPECT_EQ(r.out, "following sha256 verified\n");
}

TEST(Cli, NormDenormNormIsFixedPoint) {
  const auto first = run({kCli, "norm"}, testing_support::kNamespacedXml);
  const auto xml = run({kCli, "denorm"}, first.out);
  ASSERT_EQ(xml.exit_code, 0) << xml.err;
  EXPECT_EQ(run({kCli, "norm"}, xml.out).out, first.out);
}

TEST(Cli, ErrorsExitTwo) {
  EXPECT_EQ(run({kCli, "norm"}, "<a>").exit_code, 2);
  EXPECT_EQ(run({kCli, "norm", "/nonexistent/file.xml"}).exit_code, 2);
  EXPECT_EQ(run({kCli, "digest", "--algorithm", "sha512"}, "<a/>").exit_code, 2);
  EXPECT_EQ(run({kCli}).exit_code, 2);
  EXPECT_EQ(run({kCli, "denorm"}, "(a\r\n").exit_code, 2);
  const auto pgp = run({kCli, "sign", "-a", "pgp", "--signer-command", ""}, "<a/>");
  EXPECT_EQ(pgp.exit_code, 2);
  EXPECT_TRUE(pgp.out.empty());
}

TEST(Cli, UnsignedDocumentDoesNotVerify) {
  const auto r = run({kCli, "verify"}, "<a/>");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_TRUE(r.out.empty());
}

TEST(Cli, PgpWithExternalSigner) {
  if (!testing_support::have_program("gpg")) GTEST_SKIP() << "gpg not installed";
  TempDir home;
  const auto key = run({"gpg", "--batch", "--homedir", home.path().string(), "--passphrase", "",
                        "--quick-generate-key", "Cli Test <cli@example.org>", "ed25519", "sign", "never"});
  if (key.exit_code != 0) GTEST_SKIP() << key.err;
  const auto signed_doc = run({kCli, "sign", "-a", "pgp", "--signer-command", "gpg", "--signer-home",
                               home.path().string()},
                              testing_support::kPlainXml);
  ASSERT_EQ(signed_doc.exit_code, 0) << signed_doc.err;
  const auto ok = run({kCli, "verify", "--signer-command", "gpg", "--signer-home", home.path().string()},
                      signed_doc.out);
  EXPECT_EQ(ok.exit_code, 0) << ok.out;
  const auto without = run({kCli, "verify", "--signer-command", ""}, signed_doc.out);
  EXPECT_EQ(without.exit_code, 1);
  EXPECT_EQ(without.out.rfind("document pgp no_signer", 0), 0u) << without.out;
}
