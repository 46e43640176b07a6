#pragma once

// Event-based XML parsing on top of Expat. The parser performs namespace
// processing, attribute-value and line-end normalization, and entity
// expansion; this adapter turns its callbacks into DocEvents.

#include <expat.h>

#include <cstdint>
#include <cstring>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esisig/error.hpp"
#include "esisig/events.hpp"
#include "esisig/unicode.hpp"

namespace esisig {

struct ParseOptions {
  // Overrides the encoding declared in (or detected from) the document.
  std::optional<std::string> encoding;
};

// Byte range of the markup that produced the most recent element event,
// counted in the original input encoding.
struct ByteSpan {
  std::int64_t offset = 0;
  std::int64_t length = 0;
};

namespace detail {

// Separates URI, local name and prefix in Expat's expanded names. Control
// characters cannot occur in names or (well-formed) namespace URIs.
inline constexpr char kNameSeparator = '\x01';

inline void assign_optional(std::optional<std::string>& target, const char* begin, std::size_t len) {
  if (target) {
    target->assign(begin, len);
  } else {
    target.emplace(begin, len);
  }
}

inline void split_expanded_name(const char* raw, QualifiedName& out) {
  const char* sep = std::strchr(raw, kNameSeparator);
  if (sep == nullptr) {
    out.namespace_uri.reset();
    out.local_name.assign(raw);
    out.prefix.reset();
    return;
  }
  assign_optional(out.namespace_uri, raw, static_cast<std::size_t>(sep - raw));
  const char* local = sep + 1;
  const char* sep2 = std::strchr(local, kNameSeparator);
  if (sep2 == nullptr) {
    out.local_name.assign(local);
    out.prefix.reset();
  } else {
    out.local_name.assign(local, static_cast<std::size_t>(sep2 - local));
    assign_optional(out.prefix, sep2 + 1, std::strlen(sep2 + 1));
  }
}

inline bool is_xml_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

inline bool looks_utf16(std::string_view head) {
  if (head.size() < 2) return false;
  const auto b0 = static_cast<unsigned char>(head[0]);
  const auto b1 = static_cast<unsigned char>(head[1]);
  return (b0 == 0xFE && b1 == 0xFF) || (b0 == 0xFF && b1 == 0xFE) || (b0 == 0 && b1 == '<') ||
         (b0 == '<' && b1 == 0);
}

struct ExpatDeleter {
  void operator()(XML_Parser p) const noexcept { XML_ParserFree(p); }
};

}  // namespace detail

// Push parser: feed byte chunks, then finish(). Every event is delivered to
// the handler synchronously. Consecutive character data (including CDATA
// sections and text interrupted only by comments) arrives as one Characters
// event, so the event stream does not depend on how the input is chunked.
// Comments and DOCTYPE content produce no events.
template <EventConsumer Handler>
class BasicParser {
 public:
  explicit BasicParser(Handler handler, ParseOptions options = {})
      : handler_(std::move(handler)) {
    parser_.reset(XML_ParserCreateNS(options.encoding ? options.encoding->c_str() : nullptr,
                                     detail::kNameSeparator));
    if (!parser_) throw std::bad_alloc();
    XML_Parser p = parser_.get();
    XML_SetUserData(p, this);
    XML_SetReturnNSTriplet(p, 1);
    XML_SetElementHandler(p, &BasicParser::on_start, &BasicParser::on_end);
    XML_SetCharacterDataHandler(p, &BasicParser::on_chars);
    XML_SetProcessingInstructionHandler(p, &BasicParser::on_pi);
    XML_SetStartNamespaceDeclHandler(p, &BasicParser::on_ns);
    XML_SetSkippedEntityHandler(p, &BasicParser::on_skipped);
  }

  BasicParser(const BasicParser&) = delete;
  BasicParser& operator=(const BasicParser&) = delete;

  void feed(std::string_view chunk) { parse(chunk, false); }

  void finish() {
    parse({}, true);
    flush_text();
    emit(DocEvent{EndDocument{}});
  }

  // Convenience: feed everything and finish.
  void parse_all(std::string_view bytes) {
    feed(bytes);
    finish();
  }

  // Valid during a StartElement/EndElement callback. An empty-element tag
  // reports its whole span on start and a zero-length span on end.
  ByteSpan current_span() const noexcept { return span_; }

  Handler& handler() noexcept { return handler_; }
  const Handler& handler() const noexcept { return handler_; }

 private:
  void parse(std::string_view chunk, bool final) {
    if (!started_) {
      started_ = true;
      if (!chunk.empty()) utf16_ = detail::looks_utf16(chunk);
      emit(DocEvent{StartDocument{}});
    }
    const auto status =
        XML_Parse(parser_.get(), chunk.data(), static_cast<int>(chunk.size()), final ? 1 : 0);
    if (pending_exception_) std::rethrow_exception(std::exchange(pending_exception_, nullptr));
    if (status == XML_STATUS_ERROR) raise(chunk);
    consumed_ += static_cast<std::int64_t>(chunk.size());
  }

  [[noreturn]] void raise(std::string_view chunk) {
    XML_Parser p = parser_.get();
    const XML_Error code = XML_GetErrorCode(p);
    const std::string message = XML_ErrorString(code);
    const auto line = static_cast<std::uint64_t>(XML_GetCurrentLineNumber(p));
    const auto column = static_cast<std::uint64_t>(XML_GetCurrentColumnNumber(p));
    const std::int64_t offset = XML_GetCurrentByteIndex(p);
    if (code == XML_ERROR_UNKNOWN_ENCODING || code == XML_ERROR_INCORRECT_ENCODING) {
      throw EncodingError(message);
    }
    if ((code == XML_ERROR_INVALID_TOKEN || code == XML_ERROR_PARTIAL_CHAR) && !utf16_ &&
        undecodable_at(chunk, offset - consumed_)) {
      throw EncodingError("undecodable bytes at offset " + std::to_string(offset));
    }
    throw WellFormednessError(message, line, column, offset);
  }

  // Whether invalid UTF-8 occurs in the token starting at `pos`.
  static bool undecodable_at(std::string_view chunk, std::int64_t pos) {
    if (pos < 0 || static_cast<std::size_t>(pos) >= chunk.size()) return false;
    std::size_t i = static_cast<std::size_t>(pos);
    const std::size_t end = std::min(chunk.size(), i + 64);
    while (i < end) {
      const std::size_t before = i;
      if (unicode::decode_utf8(chunk, i) == unicode::kReplacement && i - before == 1) return true;
      if (chunk[before] == '<' && before != static_cast<std::size_t>(pos)) break;
    }
    return false;
  }

  void emit(const DocEvent& event) { handler_(event); }

  void flush_text() {
    auto& chars = std::get<Characters>(text_event_);
    if (chars.text.empty()) return;
    emit(text_event_);
    chars.text.clear();
  }

  void record_span() {
    span_.offset = XML_GetCurrentByteIndex(parser_.get());
    span_.length = XML_GetCurrentByteCount(parser_.get());
  }

  template <class F>
  static void guarded(void* user_data, F&& body) {
    auto* self = static_cast<BasicParser*>(user_data);
    if (self->pending_exception_) return;
    try {
      body(*self);
    } catch (...) {
      self->pending_exception_ = std::current_exception();
      XML_StopParser(self->parser_.get(), XML_FALSE);
    }
  }

  static void XMLCALL on_start(void* user_data, const XML_Char* name, const XML_Char** atts) {
    guarded(user_data, [&](BasicParser& self) {
      self.flush_text();
      self.record_span();
      self.declared_.push_back(std::move(self.pending_prefixes_));
      self.pending_prefixes_.clear();
      auto& start = std::get<StartElement>(self.start_event_);
      detail::split_expanded_name(name, start.name);
      std::size_t n = 0;
      for (; atts[2 * n] != nullptr; ++n) {
        if (n == start.attributes.size()) start.attributes.emplace_back();
        auto& attr = start.attributes[n];
        detail::split_expanded_name(atts[2 * n], attr.name);
        attr.value.assign(atts[2 * n + 1]);
      }
      start.attributes.resize(n);
      self.emit(self.start_event_);
    });
  }

  static void XMLCALL on_end(void* user_data, const XML_Char* name) {
    guarded(user_data, [&](BasicParser& self) {
      self.flush_text();
      self.record_span();
      auto& end = std::get<EndElement>(self.end_event_);
      detail::split_expanded_name(name, end.name);
      self.emit(self.end_event_);
      auto prefixes = std::move(self.declared_.back());
      self.declared_.pop_back();
      for (auto it = prefixes.rbegin(); it != prefixes.rend(); ++it) {
        self.emit(DocEvent{EndPrefixMapping{std::move(*it)}});
      }
    });
  }

  static void XMLCALL on_chars(void* user_data, const XML_Char* s, int len) {
    guarded(user_data, [&](BasicParser& self) {
      std::get<Characters>(self.text_event_).text.append(s, static_cast<std::size_t>(len));
    });
  }

  static void XMLCALL on_pi(void* user_data, const XML_Char* target, const XML_Char* data) {
    guarded(user_data, [&](BasicParser& self) {
      self.flush_text();
      std::string_view d = data;
      while (!d.empty() && detail::is_xml_space(d.back())) d.remove_suffix(1);
      self.emit(DocEvent{ProcessingInstruction{target, std::string(d)}});
    });
  }

  static void XMLCALL on_ns(void* user_data, const XML_Char* prefix, const XML_Char* uri) {
    guarded(user_data, [&](BasicParser& self) {
      self.flush_text();
      std::string p = prefix ? prefix : "";
      self.emit(DocEvent{StartPrefixMapping{p, uri ? uri : ""}});
      self.pending_prefixes_.push_back(std::move(p));
    });
  }

  static void XMLCALL on_skipped(void* user_data, const XML_Char* name, int is_parameter_entity) {
    if (is_parameter_entity) return;
    guarded(user_data, [&](BasicParser& self) {
      self.flush_text();
      self.emit(DocEvent{SkippedEntity{name}});
    });
  }

  Handler handler_;
  std::unique_ptr<XML_ParserStruct, detail::ExpatDeleter> parser_;
  std::exception_ptr pending_exception_;
  bool started_ = false;
  bool utf16_ = false;
  std::int64_t consumed_ = 0;
  ByteSpan span_;
  // Reused event storage; avoids reallocating names and attribute lists.
  DocEvent start_event_{StartElement{}};
  DocEvent end_event_{EndElement{}};
  DocEvent text_event_{Characters{}};
  std::vector<std::string> pending_prefixes_;
  std::vector<std::vector<std::string>> declared_;
};

// Parses a complete document into its event sequence.
inline std::vector<DocEvent> events_from_xml(std::string_view bytes, ParseOptions options = {}) {
  std::vector<DocEvent> events;
  BasicParser parser(EventRecorder{&events}, std::move(options));
  parser.parse_all(bytes);
  return events;
}

}  // namespace esisig
