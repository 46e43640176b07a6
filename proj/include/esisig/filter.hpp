#pragma once

// Pass-through filter: forwards every event unchanged while normalizing
// and digesting en passant, then reports on the document's signatures.
//
//   auto session = wrap(my_handler);
//   BasicParser parser(std::ref(session));   // or use SigningParser
//   parser.parse_all(bytes);
//   session.report();

#include <algorithm>
#include <cstdio>
#include <list>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "esisig/digest.hpp"
#include "esisig/document.hpp"
#include "esisig/error.hpp"
#include "esisig/esis.hpp"
#include "esisig/events.hpp"
#include "esisig/normalizer.hpp"
#include "esisig/parser.hpp"
#include "esisig/signature_pi.hpp"
#include "esisig/signer.hpp"

namespace esisig {

struct FilterOptions {
  // Digests maintained over the whole-document blob. A whole-document
  // signature using an algorithm outside this set is reported as
  // unsupported_algorithm.
  std::vector<DigestAlgorithm> digests{kDigestAlgorithms.begin(), kDigestAlgorithms.end()};
};

namespace detail {

// Incremental verifier shared by FilterSession and SigningParser. Memory
// stays bounded by the attribute-block size and digest state, except that
// pgp verification spools the blob to a temporary file and following-element
// captures hold their subtree's blob when a signer is present.
class StreamingVerifier {
 public:
  StreamingVerifier(Signer* signer, const FilterOptions& options)
      : signer_(signer),
        tracked_(options.digests),
        digests_(options.digests),
        whole_(WholeSink{this}) {
    if (signer_ != nullptr) {
      spool_.reset(std::tmpfile());
      if (!spool_) throw SignerFailure("cannot create spool file");
    }
  }

  StreamingVerifier(const StreamingVerifier&) = delete;
  StreamingVerifier& operator=(const StreamingVerifier&) = delete;

  void operator()(const DocEvent& event) {
    if (finished_) return;
    if (std::holds_alternative<StartElement>(event)) {
      for (auto& capture : captures_) {
        if (!capture->open && capture->depth == depth_) capture->open = true;
      }
      ++depth_;
    } else if (const auto* pi = std::get_if<ProcessingInstruction>(&event);
               pi != nullptr && pi->target == kSignatureTarget) {
      on_signature(pi->data);
    } else if (std::holds_alternative<EndElement>(event)) {
      abandon_waiting([this](const Capture& c) { return c.depth == depth_; });
    }

    scratch_.clear();
    builder_(event);
    for (const auto& record : scratch_) {
      whole_(record);
      for (auto& capture : captures_) {
        if (capture->open) capture->normalizer(record);
      }
    }

    if (std::holds_alternative<EndElement>(event)) {
      --depth_;
      for (auto it = captures_.begin(); it != captures_.end();) {
        if ((*it)->open && (*it)->depth == depth_) {
          resolve(**it);
          it = captures_.erase(it);
        } else {
          ++it;
        }
      }
    } else if (std::holds_alternative<EndDocument>(event)) {
      finish_document();
    }
  }

  bool finished() const noexcept { return finished_; }

  const VerificationReport& report() const {
    if (!finished_) throw NotFinished("signature report requested before end of document");
    return report_;
  }

  std::string digest(DigestAlgorithm algorithm) const {
    if (!finished_) throw NotFinished("digest requested before end of document");
    const auto it = std::find_if(final_digests_.begin(), final_digests_.end(),
                                 [&](const auto& p) { return p.first == algorithm; });
    if (it == final_digests_.end()) {
      throw UnsupportedAlgorithm(std::string(algorithm_token(algorithm)) + " not tracked");
    }
    return it->second;
  }

 private:
  struct WholeSink {
    StreamingVerifier* self;
    void operator()(std::string_view bytes) const {
      self->digests_.update(bytes);
      if (self->spool_) std::fwrite(bytes.data(), 1, bytes.size(), self->spool_.get());
    }
  };

  struct Capture;

  struct CaptureSink {
    Capture* capture;
    void operator()(std::string_view bytes) const {
      if (capture->digest) capture->digest->update(bytes);
      if (capture->keep_bytes) capture->bytes.append(bytes);
    }
  };

  struct Capture {
    explicit Capture(std::size_t entry_index, SignaturePI signature, std::size_t at_depth)
        : entry(entry_index), pi(std::move(signature)), depth(at_depth), normalizer(CaptureSink{this}) {}

    std::size_t entry;
    SignaturePI pi;
    std::size_t depth;
    bool open = false;
    bool keep_bytes = false;
    std::optional<Digest> digest;
    std::string bytes;
    Normalizer<CaptureSink> normalizer;
  };

  struct FileCloser {
    void operator()(std::FILE* f) const noexcept { std::fclose(f); }
  };

  void on_signature(std::string_view data) {
    const std::size_t index = report_.entries.size();
    report_.entries.emplace_back();
    SignaturePI pi;
    try {
      pi = parse_signature_pi(data);
    } catch (const MalformedPIError& e) {
      report_.entries[index] = malformed_entry(e.what());
      return;
    }
    report_.entries[index].target = pi.target;
    report_.entries[index].algorithm = pi.algorithm;
    if (pi.target == SignatureTarget::whole_document) {
      pending_whole_.emplace_back(index, std::move(pi));
      return;
    }
    auto capture = std::make_unique<Capture>(index, std::move(pi), depth_);
    if (const auto algorithm = digest_algorithm_from_token(capture->pi.algorithm)) {
      capture->digest.emplace(*algorithm);
    } else {
      capture->keep_bytes = signer_ != nullptr && capture->pi.algorithm == "pgp";
    }
    captures_.push_back(std::move(capture));
  }

  template <class Pred>
  void abandon_waiting(Pred pred) {
    for (auto it = captures_.begin(); it != captures_.end();) {
      if (!(*it)->open && pred(**it)) {
        auto& entry = report_.entries[(*it)->entry];
        entry.status = VerificationStatus::malformed;
        entry.diagnostic = kNoFollowingElement;
        it = captures_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void resolve(Capture& capture) {
    capture.normalizer.finish();
    report_.entries[capture.entry] = check_signature(
        capture.pi, [&](DigestAlgorithm) { return capture.digest->hex(); },
        [&] { return capture.bytes; }, signer_);
  }

  void finish_document() {
    whole_.finish();
    abandon_waiting([](const Capture&) { return true; });
    for (auto algorithm : tracked_) final_digests_.emplace_back(algorithm, *digests_.hex(algorithm));
    for (auto& [index, pi] : pending_whole_) {
      const auto algorithm = digest_algorithm_from_token(pi.algorithm);
      if (algorithm && std::find(tracked_.begin(), tracked_.end(), *algorithm) == tracked_.end()) {
        report_.entries[index] = {pi.target, pi.algorithm, VerificationStatus::unsupported_algorithm,
                                  "algorithm not tracked by this session"};
        continue;
      }
      report_.entries[index] = check_signature(
          pi, [&](DigestAlgorithm a) { return *digests_.hex(a); }, [&] { return spooled_blob(); },
          signer_);
    }
    pending_whole_.clear();
    spool_.reset();
    finished_ = true;
  }

  std::string spooled_blob() {
    std::string blob;
    std::FILE* f = spool_.get();
    if (f == nullptr) return blob;
    std::fflush(f);
    std::rewind(f);
    char buffer[65536];
    std::size_t n = 0;
    while ((n = std::fread(buffer, 1, sizeof buffer, f)) > 0) blob.append(buffer, n);
    return blob;
  }

  Signer* signer_;
  std::vector<DigestAlgorithm> tracked_;
  DigestSet digests_;
  std::unique_ptr<std::FILE, FileCloser> spool_;
  Normalizer<WholeSink> whole_;
  std::vector<EsisRecord> scratch_;
  RecordBuilder<RecordRecorder> builder_{RecordRecorder{&scratch_}};
  std::list<std::unique_ptr<Capture>> captures_;
  std::vector<std::pair<std::size_t, SignaturePI>> pending_whole_;
  std::vector<std::pair<DigestAlgorithm, std::string>> final_digests_;
  VerificationReport report_;
  std::size_t depth_ = 0;
  bool finished_ = false;
};

}  // namespace detail

// Event consumer that forwards to `Downstream` and verifies on the side.
template <EventConsumer Downstream>
class FilterSession {
 public:
  explicit FilterSession(Downstream downstream, Signer* signer = nullptr, FilterOptions options = {})
      : downstream_(std::move(downstream)),
        verifier_(std::make_unique<detail::StreamingVerifier>(signer, options)) {}

  void operator()(const DocEvent& event) {
    downstream_(event);
    (*verifier_)(event);
  }

  bool finished() const noexcept { return verifier_->finished(); }

  // Throws NotFinished until EndDocument has been seen.
  const VerificationReport& report() const { return verifier_->report(); }

  // Whole-document digest of the normalized blob.
  std::string digest(DigestAlgorithm algorithm) const { return verifier_->digest(algorithm); }

  Downstream& downstream() noexcept { return downstream_; }
  const Downstream& downstream() const noexcept { return downstream_; }

 private:
  Downstream downstream_;
  std::unique_ptr<detail::StreamingVerifier> verifier_;
};

template <EventConsumer Downstream>
FilterSession<Downstream> wrap(Downstream downstream, Signer* signer = nullptr, FilterOptions options = {}) {
  return FilterSession<Downstream>(std::move(downstream), signer, std::move(options));
}

// Drop-in replacement for BasicParser that can be queried for signature
// results and digests once finish() has returned.
template <EventConsumer Handler>
class SigningParser {
 public:
  explicit SigningParser(Handler handler, Signer* signer = nullptr, FilterOptions filter = {},
                         ParseOptions parse = {})
      : parser_(FilterSession<Handler>(std::move(handler), signer, std::move(filter)), std::move(parse)) {}

  void feed(std::string_view chunk) { parser_.feed(chunk); }
  void finish() { parser_.finish(); }
  void parse_all(std::string_view bytes) { parser_.parse_all(bytes); }
  ByteSpan current_span() const noexcept { return parser_.current_span(); }

  const VerificationReport& report() const { return parser_.handler().report(); }
  std::string digest(DigestAlgorithm algorithm) const { return parser_.handler().digest(algorithm); }

  Handler& handler() noexcept { return parser_.handler().downstream(); }

 private:
  BasicParser<FilterSession<Handler>> parser_;
};

}  // namespace esisig
