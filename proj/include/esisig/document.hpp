#pragma once

// Whole-document signing and batch verification.
//
// A signature PI signs Norm(ESIS(target)): the whole document by default,
// or the element immediately following the PI (within the same parent).
// Because normalization drops every signature PI, inserting, moving or
// editing signature PIs never changes any signed blob.

#include <algorithm>
#include <cctype>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "esisig/digest.hpp"
#include "esisig/error.hpp"
#include "esisig/esis.hpp"
#include "esisig/events.hpp"
#include "esisig/normalizer.hpp"
#include "esisig/parser.hpp"
#include "esisig/signature_pi.hpp"
#include "esisig/signer.hpp"
#include "esisig/unicode.hpp"

namespace esisig {

enum class VerificationStatus { verified, failed, unsupported_algorithm, malformed, no_signer };

inline std::string_view status_name(VerificationStatus status) {
  switch (status) {
    case VerificationStatus::verified:
      return "verified";
    case VerificationStatus::failed:
      return "failed";
    case VerificationStatus::unsupported_algorithm:
      return "unsupported_algorithm";
    case VerificationStatus::malformed:
      return "malformed";
    case VerificationStatus::no_signer:
      return "no_signer";
  }
  return "";
}

struct VerificationEntry {
  SignatureTarget target = SignatureTarget::whole_document;
  std::string algorithm;
  VerificationStatus status = VerificationStatus::malformed;
  std::string diagnostic;

  bool operator==(const VerificationEntry&) const = default;
};

// One entry per signature PI, in document order.
struct VerificationReport {
  std::vector<VerificationEntry> entries;

  bool operator==(const VerificationReport&) const = default;

  // A document with no signatures is not "verified".
  bool all_verified() const {
    return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) {
             return e.status == VerificationStatus::verified;
           });
  }
};

enum class Placement { at_start, at_end };

namespace detail {

inline const std::string kNoFollowingElement = "no element follows the signature PI in its parent";

inline std::string lowercase_trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Checks one parsed signature against its blob. `digest_of` returns the
// blob's digest for an algorithm; `blob_bytes` returns the blob itself and
// is only called for signer-backed algorithms.
inline VerificationEntry check_signature(const SignaturePI& pi,
                                         const std::function<std::string(DigestAlgorithm)>& digest_of,
                                         const std::function<std::string()>& blob_bytes,
                                         Signer* signer) {
  VerificationEntry entry{pi.target, pi.algorithm, VerificationStatus::failed, {}};
  if (const auto algorithm = digest_algorithm_from_token(pi.algorithm)) {
    const std::string computed = digest_of(*algorithm);
    if (lowercase_trimmed(pi.content) == computed) {
      entry.status = VerificationStatus::verified;
    } else {
      entry.diagnostic = "digest mismatch: computed " + computed;
    }
  } else if (pi.algorithm == "pgp") {
    if (signer == nullptr) {
      entry.status = VerificationStatus::no_signer;
      entry.diagnostic = "no signer configured for pgp signatures";
    } else {
      try {
        auto verdict = signer->verify(blob_bytes(), pi.content);
        entry.status = verdict.valid ? VerificationStatus::verified : VerificationStatus::failed;
        entry.diagnostic = std::move(verdict.diagnostic);
      } catch (const SignerFailure& e) {
        entry.diagnostic = e.what();
      }
    }
  } else {
    entry.status = VerificationStatus::unsupported_algorithm;
    entry.diagnostic = "unsupported algorithm '" + pi.algorithm + "'";
  }
  return entry;
}

inline VerificationEntry malformed_entry(std::string diagnostic) {
  return {SignatureTarget::whole_document, {}, VerificationStatus::malformed, std::move(diagnostic)};
}

inline bool is_signature_pi(const EsisRecord& record) {
  const auto* pi = std::get_if<esis::PI>(&record);
  return pi != nullptr && pi->target == kSignatureTarget;
}

// Whether an element starts after `records` begin and before the enclosing
// element closes.
inline bool element_follows(std::span<const EsisRecord> records) {
  for (const auto& r : records) {
    if (std::holds_alternative<esis::StartElem>(r) || std::holds_alternative<esis::StartElemNS>(r) ||
        std::holds_alternative<esis::Attr>(r) || std::holds_alternative<esis::NsAttr>(r)) {
      return true;
    }
    if (std::holds_alternative<esis::EndElem>(r) || std::holds_alternative<esis::EndElemNS>(r)) {
      return false;
    }
  }
  return false;
}

enum class ByteEncoding { utf8, utf16le, utf16be, latin1 };

inline ByteEncoding detect_byte_encoding(std::string_view xml) {
  if (xml.size() >= 2) {
    const auto b0 = static_cast<unsigned char>(xml[0]);
    const auto b1 = static_cast<unsigned char>(xml[1]);
    if ((b0 == 0xFF && b1 == 0xFE) || (b0 == '<' && b1 == 0)) return ByteEncoding::utf16le;
    if ((b0 == 0xFE && b1 == 0xFF) || (b0 == 0 && b1 == '<')) return ByteEncoding::utf16be;
  }
  if (xml.starts_with("<?xml")) {
    const auto decl = xml.substr(0, xml.find("?>"));
    const auto pos = decl.find("encoding");
    if (pos != std::string_view::npos) {
      auto rest = decl.substr(pos + 8);
      const auto q = rest.find_first_of("\"'");
      if (q != std::string_view::npos) {
        rest.remove_prefix(q + 1);
        const auto name = lowercase_trimmed(rest.substr(0, rest.find_first_of("\"'")));
        if (name == "iso-8859-1" || name == "latin1" || name == "iso_8859-1" || name == "us-ascii") {
          return ByteEncoding::latin1;
        }
      }
    }
  }
  return ByteEncoding::utf8;
}

inline std::string encode_text(std::string_view utf8, ByteEncoding encoding) {
  switch (encoding) {
    case ByteEncoding::utf16le:
      return unicode::utf8_to_utf16(utf8, true);
    case ByteEncoding::utf16be:
      return unicode::utf8_to_utf16(utf8, false);
    case ByteEncoding::latin1:
      if (auto latin1 = unicode::utf8_to_latin1(utf8)) return *latin1;
      throw SigningError("text not representable in the document encoding");
    case ByteEncoding::utf8:
      break;
  }
  return std::string(utf8);
}

}  // namespace detail

// Batch verifier: materializes the record sequence and normalizes each
// signature's target independently.
inline VerificationReport verify_document(std::string_view xml, Signer* signer = nullptr) {
  const auto records = events_to_records(events_from_xml(xml));
  const std::span<const EsisRecord> all(records);
  std::optional<NormalizedBlob> whole;
  VerificationReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!detail::is_signature_pi(records[i])) continue;
    SignaturePI pi;
    try {
      pi = parse_signature_pi(std::get<esis::PI>(records[i]).data);
    } catch (const MalformedPIError& e) {
      report.entries.push_back(detail::malformed_entry(e.what()));
      continue;
    }
    NormalizedBlob blob;
    if (pi.target == SignatureTarget::whole_document) {
      if (!whole) whole = normalize(all);
      blob = *whole;
    } else {
      const auto after = all.subspan(i + 1);
      if (!detail::element_follows(after)) {
        auto entry = detail::malformed_entry(detail::kNoFollowingElement);
        entry.target = pi.target;
        entry.algorithm = pi.algorithm;
        report.entries.push_back(std::move(entry));
        continue;
      }
      blob = normalize(after, {NormalizeScope::subtree_of_next_element});
    }
    report.entries.push_back(detail::check_signature(
        pi, [&](DigestAlgorithm a) { return digest(blob.bytes, algorithm_token(a)); },
        [&] { return blob.bytes; }, signer));
  }
  return report;
}

// Embeds a signature PI right after the root start tag (at_start) or right
// before the root end tag (at_end). With target following_element the PI
// goes at the start of the root and signs the root's first child element.
// The PI is encoded like the rest of the document (UTF-8, UTF-16 or
// ISO-8859-1); an empty-element root tag is expanded into a start/end pair.
inline std::string sign_document(std::string_view xml, std::string_view algorithm, Signer* signer,
                                 Placement placement = Placement::at_end,
                                 SignatureTarget target = SignatureTarget::whole_document) {
  const bool pgp = algorithm == "pgp";
  if (!pgp && !digest_algorithm_from_token(algorithm)) {
    throw UnsupportedAlgorithm("unsupported algorithm: " + std::string(algorithm));
  }
  if (pgp && signer == nullptr) throw SigningError("pgp signatures need a signer");
  if (target == SignatureTarget::following_element && placement == Placement::at_end) {
    throw SigningError("a following-element signature cannot be placed at the end of the root");
  }

  struct Scan {
    std::size_t depth = 0;
    ByteSpan root_start;
    ByteSpan root_end;
    std::string root_qname;
    std::string whole;
    std::string child;
    bool child_seen = false;
    std::size_t child_depth = 0;
    bool capturing = false;
  } scan;

  Normalizer whole_normalizer(StringSink{&scan.whole});
  Normalizer child_normalizer(StringSink{&scan.child});
  std::vector<EsisRecord> scratch;
  RecordBuilder builder(RecordRecorder{&scratch});

  using Parser = BasicParser<std::function<void(const DocEvent&)>>;
  Parser* self = nullptr;
  Parser parser([&](const DocEvent& event) {
    const auto* start = std::get_if<StartElement>(&event);
    const bool is_end = std::holds_alternative<EndElement>(event);
    if (start != nullptr) {
      if (scan.depth == 0) {
        scan.root_start = self->current_span();
        scan.root_qname = start->name.qname();
      } else if (scan.depth == 1 && !scan.child_seen) {
        scan.child_seen = true;
        scan.capturing = true;
        scan.child_depth = scan.depth;
      }
      ++scan.depth;
    }
    scratch.clear();
    builder(event);
    for (const auto& r : scratch) {
      whole_normalizer(r);
      if (scan.capturing) child_normalizer(r);
    }
    if (is_end) {
      --scan.depth;
      if (scan.depth == 0) scan.root_end = self->current_span();
      if (scan.capturing && scan.depth == scan.child_depth) {
        scan.capturing = false;
        child_normalizer.finish();
      }
    }
  });
  self = &parser;
  parser.parse_all(xml);
  whole_normalizer.finish();

  if (target == SignatureTarget::following_element && !scan.child_seen) {
    throw SigningError("the root element has no child element to sign");
  }
  const std::string& blob = target == SignatureTarget::whole_document ? scan.whole : scan.child;

  SignaturePI pi;
  pi.algorithm = std::string(algorithm);
  pi.target = target;
  pi.content = pgp ? signer->sign(blob) : digest(blob, algorithm);

  const auto encoding = detail::detect_byte_encoding(xml);
  const std::string pi_bytes = detail::encode_text(format_signature_pi(pi), encoding);
  const bool empty_root = scan.root_end.length == 0;
  std::string out;
  out.reserve(xml.size() + pi_bytes.size() + scan.root_qname.size() * 2 + 8);
  if (empty_root) {
    const std::size_t unit =
        encoding == detail::ByteEncoding::utf16le || encoding == detail::ByteEncoding::utf16be ? 2 : 1;
    const auto tag_end = static_cast<std::size_t>(scan.root_start.offset + scan.root_start.length);
    const std::size_t slash = tag_end - 2 * unit;
    out.append(xml.substr(0, slash));
    out += detail::encode_text(">", encoding);
    out += pi_bytes;
    out += detail::encode_text("</" + scan.root_qname + ">", encoding);
    out.append(xml.substr(tag_end));
  } else {
    const auto at = static_cast<std::size_t>(placement == Placement::at_start
                                                 ? scan.root_start.offset + scan.root_start.length
                                                 : scan.root_end.offset);
    out.append(xml.substr(0, at));
    out += pi_bytes;
    out.append(xml.substr(at));
  }
  return out;
}

}  // namespace esisig
