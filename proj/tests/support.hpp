#pragma once

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "esisig/esisig.hpp"

namespace testing_support {

inline const std::string kNamespacedXml =
    "<doc><pfx:p class='foo'\n"
    "  xmlns:pfx=\"urn:NS\"\n"
    "  pfx:att='bar'\n"
    ">Hello</pfx:p>\n"
    "\n"
    "<p>   &amp;&#xD;goodbye,\n"
    "chum</p>\n"
    "  </doc>\n";

inline const std::string kNamespacedUnnormalized =
    "(doc\n"
    "Mpfx urn:NS\n"
    "Aclass CDATA foo\n"
    "Burn:NS att CDATA bar\n"
    "[urn:NS p\n"
    "-Hello\n"
    "]urn:NS p\n"
    "mpfx\n"
    "-\\n\\n\n"
    "(p\n"
    "-   &\\rgoodbye,\\nchum\n"
    ")p\n"
    "-\\n  \n"
    ")doc\n";

inline const std::string kNamespacedBlob =
    "(doc\r\nAclass CDATA foo\r\nBurn:NS att CDATA bar\r\n[urn:NS p\r\n-Hello\r\n]urn:NS p\r\n"
    "(p\r\n- & goodbye, chum\r\n)p\r\n)doc\r\n";

inline const std::string kPlainXml =
    "<doc>\n"
    "<p class='foo'>Hello</p>\n"
    "  <p> there\n"
    "chum\n"
    "</p>\n"
    "</doc>\n";

inline const std::string kPlainBlob =
    "(doc\r\nAclass CDATA foo\r\n(p\r\n-Hello\r\n)p\r\n(p\r\n- there chum \r\n)p\r\n)doc\r\n";

// Parsed data of the first signature PI in a UTF-8 document.
inline esisig::SignaturePI first_signature(std::string_view xml) {
  const auto begin = xml.find("<?signature ");
  const auto end = xml.find("?>", begin);
  if (begin == std::string_view::npos || end == std::string_view::npos) throw std::runtime_error("no signature PI");
  return esisig::parse_signature_pi(xml.substr(begin + 12, end - begin - 12));
}

inline std::string blob_of(std::string_view xml) {
  return esisig::normalize(esisig::events_to_records(esisig::events_from_xml(xml))).bytes;
}

// Deterministic stand-in for an OpenPGP tool.
class FakeSigner : public esisig::Signer {
 public:
  std::string sign(std::string_view bytes) override {
    ++sign_calls;
    return "-----BEGIN PGP SIGNATURE-----\n" + esisig::digest(bytes, "sha256") + "\n-----END PGP SIGNATURE-----";
  }

  esisig::SignerVerdict verify(std::string_view bytes, std::string_view armored) override {
    ++verify_calls;
    const bool ok = armored == sign(bytes);
    --sign_calls;
    return {ok, ok ? "good" : "BAD signature"};
  }

  int sign_calls = 0;
  int verify_calls = 0;
};

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "esisig-test-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct CommandResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs argv[0] with the given standard input.
inline CommandResult run(const std::vector<std::string>& argv, std::string_view input = {}) {
  const auto r = esisig::run_process(argv, input);
  return {r.exit_code, r.out, r.err};
}

inline bool have_program(const std::string& name) {
  const std::string cmd = "command -v " + name + " >/dev/null 2>&1";
  return std::system(cmd.c_str()) == 0;
}

// The hex digest field printed by `openssl dgst -<alg> -r file`.
inline std::string openssl_digest(const std::filesystem::path& file, const std::string& algorithm) {
  const auto r = run({"openssl", "dgst", "-" + algorithm, "-r", file.string()});
  if (r.exit_code != 0) return "openssl failed: " + r.err;
  return r.out.substr(0, r.out.find(' '));
}

}  // namespace testing_support
