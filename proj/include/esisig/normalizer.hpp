#pragma once

// Normalization of an ESIS record stream into the byte blob that gets
// signed. The blob is UTF-8, one CRLF-terminated line per surviving record:
//
//   - M, m, = and X records are dropped, as are attributes in the xml: and
//     xmlns: namespaces and every PI whose target is exactly "signature";
//   - consecutive text records are merged, then every run of collapsible
//     whitespace (below U+0020, U+0085, U+2028) in attribute values, text
//     and PI data becomes one U+0020 (no trimming);
//   - text that is empty or a single space after collapsing is dropped;
//   - attributes render as "A<name> CDATA <value>" and
//     "B<ns> <local> CDATA <value>", and each element's attribute lines are
//     sorted bytewise.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "esisig/error.hpp"
#include "esisig/esis.hpp"
#include "esisig/unicode.hpp"

namespace esisig {

enum class NormalizeScope {
  whole_document,
  // The first element to start (from its attribute block to its matching
  // end record); everything before and after it is ignored.
  subtree_of_next_element,
};

struct NormalizeOptions {
  NormalizeScope scope = NormalizeScope::whole_document;
};

struct NormalizedBlob {
  std::string bytes;

  bool operator==(const NormalizedBlob&) const = default;
};

inline void append_collapsed(std::string& out, std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t ws = unicode::collapsible_length(text, i);
    if (ws == 0) {
      out.push_back(text[i++]);
      continue;
    }
    out.push_back(' ');
    while (i < text.size() && (ws = unicode::collapsible_length(text, i)) != 0) i += ws;
  }
}

inline std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  append_collapsed(out, text);
  return out;
}

template <class T>
concept ByteSink = requires(T& sink, std::string_view bytes) { sink(bytes); };

// Streaming normalizer. Feed records with operator(), then call finish().
// Output is buffered in blocks and handed to the sink; apart from that,
// only the current element's attribute lines are held.
template <ByteSink Sink>
class Normalizer {
 public:
  static constexpr std::size_t kFlushThreshold = 64 * 1024;

  explicit Normalizer(Sink sink, NormalizeOptions options = {})
      : sink_(std::move(sink)), options_(options) {
    if (options_.scope == NormalizeScope::whole_document) state_ = State::active;
  }

  void operator()(const EsisRecord& record) {
    if (state_ == State::done) return;
    std::visit([this](const auto& r) { on(r); }, record);
  }

  // Checks that every element was closed and flushes the remaining bytes.
  void finish() {
    end_text();
    if (!attributes_.empty()) throw NestingError("attribute records not followed by a start record");
    if (!open_.empty()) throw NestingError("unclosed element at end of input");
    flush();
  }

  // True once a subtree-scoped normalizer has seen its element close.
  bool done() const noexcept { return state_ == State::done; }

  Sink& sink() noexcept { return sink_; }

 private:
  enum class State { waiting, active, done };

  void on(const esis::StartMapping&) {}
  void on(const esis::EndMapping&) {}
  void on(const esis::Ignorable&) {}
  void on(const esis::Skipped&) {}

  void on(const esis::Attr& r) {
    if (!begin_attributes()) return;
    if (r.name == "xmlns" || r.name.starts_with("xmlns:") || r.name.starts_with("xml:")) return;
    std::string line = "A";
    line += r.name;
    line += " CDATA ";
    append_collapsed(line, r.value);
    attributes_.push_back(std::move(line));
  }

  void on(const esis::NsAttr& r) {
    if (!begin_attributes()) return;
    if (r.ns == kXmlNamespace || r.ns == kXmlnsNamespace) return;
    std::string line = "B";
    line += r.ns;
    line += ' ';
    line += r.local;
    line += " CDATA ";
    append_collapsed(line, r.value);
    attributes_.push_back(std::move(line));
  }

  void on(const esis::StartElem& r) { start('(', r.name, r.name); }

  void on(const esis::StartElemNS& r) {
    std::string key = r.ns;
    key += ' ';
    key += r.local;
    start('[', key, key);
  }

  void on(const esis::EndElem& r) { end(')', r.name); }

  void on(const esis::EndElemNS& r) {
    std::string key = r.ns;
    key += ' ';
    key += r.local;
    end(']', key);
  }

  void on(const esis::Text& r) {
    if (state_ != State::active) return;
    if (!attributes_.empty()) throw NestingError("text between attribute records and start record");
    for (std::size_t i = 0; i < r.text.size();) {
      std::size_t ws = unicode::collapsible_length(r.text, i);
      if (ws != 0) {
        pending_space_ = true;
        i += ws;
        continue;
      }
      std::size_t j = i + 1;
      while (j < r.text.size() && unicode::collapsible_length(r.text, j) == 0) ++j;
      if (!text_open_) {
        out_ += '-';
        text_open_ = true;
      }
      if (pending_space_) {
        out_ += ' ';
        pending_space_ = false;
      }
      out_.append(r.text, i, j - i);
      i = j;
    }
  }

  void on(const esis::PI& r) {
    if (state_ != State::active) return;
    if (r.target == "signature") return;
    end_text();
    if (!attributes_.empty()) throw NestingError("PI between attribute records and start record");
    out_ += '?';
    out_ += r.target;
    out_ += ' ';
    append_collapsed(out_, r.data);
    line_end();
  }

  // Returns whether the attribute should be considered at all.
  bool begin_attributes() {
    if (state_ == State::waiting) state_ = State::active;
    if (state_ != State::active) return false;
    end_text();
    return true;
  }

  void start(char kind, std::string_view body, std::string key) {
    if (state_ == State::waiting) state_ = State::active;
    if (state_ != State::active) return;
    end_text();
    std::sort(attributes_.begin(), attributes_.end());
    for (const auto& line : attributes_) {
      out_ += line;
      line_end();
    }
    attributes_.clear();
    out_ += kind;
    out_ += body;
    line_end();
    open_.push_back(std::move(key));
  }

  void end(char kind, const std::string& key) {
    if (state_ != State::active) return;
    end_text();
    if (!attributes_.empty()) throw NestingError("end record after attribute records");
    if (open_.empty()) throw NestingError("end record without matching start: " + key);
    if (open_.back() != key) {
      throw NestingError("end record '" + key + "' does not match start '" + open_.back() + "'");
    }
    open_.pop_back();
    out_ += kind;
    out_ += key;
    line_end();
    if (open_.empty() && options_.scope == NormalizeScope::subtree_of_next_element) {
      state_ = State::done;
      flush();
    }
  }

  void end_text() {
    if (text_open_) {
      if (pending_space_) out_ += ' ';
      line_end();
    }
    text_open_ = false;
    pending_space_ = false;
  }

  void line_end() {
    out_ += "\r\n";
    if (out_.size() >= kFlushThreshold) flush();
  }

  void flush() {
    if (out_.empty()) return;
    sink_(std::string_view(out_));
    out_.clear();
  }

  Sink sink_;
  NormalizeOptions options_;
  State state_ = State::waiting;
  std::string out_;
  std::vector<std::string> attributes_;
  std::vector<std::string> open_;
  bool text_open_ = false;
  bool pending_space_ = false;
};

struct StringSink {
  std::string* out;
  void operator()(std::string_view bytes) const { out->append(bytes); }
};

inline NormalizedBlob normalize(std::span<const EsisRecord> records, NormalizeOptions options = {}) {
  NormalizedBlob blob;
  Normalizer normalizer(StringSink{&blob.bytes}, options);
  for (const auto& record : records) normalizer(record);
  normalizer.finish();
  return blob;
}

}  // namespace esisig
