// esisig: normalize, digest, sign and verify XML documents from the shell.
//
// Exit status: 0 success (verify: every signature verified), 1 a signature
// did not verify, 2 usage, parse or I/O error.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <sstream>
#include <string>

#include "esisig/esisig.hpp"

namespace {

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    return std::move(buffer).str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw esisig::Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_output(std::string_view bytes) {
  if (std::fwrite(bytes.data(), 1, bytes.size(), stdout) != bytes.size() || std::fflush(stdout) != 0) {
    throw esisig::Error("write to standard output failed");
  }
}

struct SignerFlags {
  std::string command;
  std::string key;
  std::string homedir;

  std::unique_ptr<esisig::Signer> make() const {
    std::string executable = command;
    if (executable.empty()) {
      if (const char* env = std::getenv("ESISIG_SIGNER"); env != nullptr) executable = env;
    }
    if (executable.empty()) return nullptr;
    esisig::GpgOptions options;
    options.executable = executable;
    if (!key.empty()) options.local_user = key;
    if (!homedir.empty()) options.homedir = homedir;
    return std::make_unique<esisig::GpgSigner>(options);
  }
};

void add_signer_flags(CLI::App* cmd, SignerFlags& flags) {
  cmd->add_option("--signer-command", flags.command,
                  "OpenPGP executable for pgp signatures (default: $ESISIG_SIGNER)");
  cmd->add_option("--signer-key", flags.key, "key to sign with");
  cmd->add_option("--signer-home", flags.homedir, "keyring directory passed to the signer");
}

std::string target_text(esisig::SignatureTarget target) {
  return target == esisig::SignatureTarget::whole_document ? "document" : "following";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Normalize, digest, sign and verify XML documents"};
  app.require_subcommand(1);

  std::string input;
  std::string algorithm = "sha1";
  std::string placement;  // default: end, or start for --target following
  std::string target = "document";
  bool batch = false;
  SignerFlags signer_flags;

  auto add_input = [&](CLI::App* cmd) { cmd->add_option("input", input, "input file (default: standard input)"); };

  auto* esis = app.add_subcommand("esis", "write the unnormalized record listing");
  add_input(esis);
  auto* norm = app.add_subcommand("norm", "write the normalized blob");
  add_input(norm);
  auto* digest = app.add_subcommand("digest", "write the hex digest of the normalized blob");
  add_input(digest);
  digest->add_option("--algorithm,-a", algorithm, "md5, sha1 or sha256")
      ->check(CLI::IsMember({"md5", "sha1", "sha256"}));
  auto* sign = app.add_subcommand("sign", "embed a signature processing instruction");
  add_input(sign);
  sign->add_option("--algorithm,-a", algorithm, "md5, sha1, sha256 or pgp")
      ->check(CLI::IsMember({"md5", "sha1", "sha256", "pgp"}));
  sign->add_option("--placement", placement, "start or end of the root element")
      ->check(CLI::IsMember({"start", "end"}));
  sign->add_option("--target", target, "document, or the following element")
      ->check(CLI::IsMember({"document", "following"}));
  add_signer_flags(sign, signer_flags);
  auto* verify = app.add_subcommand("verify", "check every signature in a document");
  add_input(verify);
  verify->add_flag("--batch", batch, "materialize the document instead of verifying in one streaming pass");
  add_signer_flags(verify, signer_flags);
  auto* denorm = app.add_subcommand("denorm", "reconstruct XML from a normalized blob");
  add_input(denorm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const std::string bytes = read_input(input);
    if (esis->parsed()) {
      write_output(esisig::render_unnormalized(esisig::events_to_records(esisig::events_from_xml(bytes))));
    } else if (norm->parsed()) {
      write_output(esisig::normalize(esisig::events_to_records(esisig::events_from_xml(bytes))).bytes);
    } else if (digest->parsed()) {
      const auto alg = *esisig::digest_algorithm_from_token(algorithm);
      esisig::SigningParser parser(esisig::NullConsumer{}, nullptr, esisig::FilterOptions{{alg}});
      parser.parse_all(bytes);
      write_output(parser.digest(alg) + "\n");
    } else if (sign->parsed()) {
      const auto signer = signer_flags.make();
      if (algorithm == "pgp" && !signer) {
        throw esisig::SigningError("pgp needs --signer-command or ESISIG_SIGNER");
      }
      const auto what = target == "document" ? esisig::SignatureTarget::whole_document
                                             : esisig::SignatureTarget::following_element;
      if (placement.empty()) placement = target == "document" ? "end" : "start";
      const auto where = placement == "start" ? esisig::Placement::at_start : esisig::Placement::at_end;
      write_output(esisig::sign_document(bytes, algorithm, signer.get(), where, what));
    } else if (verify->parsed()) {
      const auto signer = signer_flags.make();
      esisig::VerificationReport report;
      if (batch) {
        report = esisig::verify_document(bytes, signer.get());
      } else {
        esisig::SigningParser parser(esisig::NullConsumer{}, signer.get());
        parser.parse_all(bytes);
        report = parser.report();
      }
      std::string out;
      for (const auto& entry : report.entries) {
        out += target_text(entry.target) + ' ' + (entry.algorithm.empty() ? "-" : entry.algorithm) + ' ' +
               std::string(esisig::status_name(entry.status));
        if (!entry.diagnostic.empty() && entry.status != esisig::VerificationStatus::verified) {
          std::string diagnostic = entry.diagnostic;
          for (char& c : diagnostic) {
            if (c == '\n' || c == '\r') c = ' ';
          }
          out += ": " + diagnostic;
        }
        out += '\n';
      }
      write_output(out);
      if (report.entries.empty()) {
        std::cerr << "esisig: no signatures found\n";
        return 1;
      }
      return report.all_verified() ? 0 : 1;
    } else if (denorm->parsed()) {
      write_output(esisig::denormalize(bytes));
    }
  } catch (const std::exception& e) {
    std::cerr << "esisig: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
