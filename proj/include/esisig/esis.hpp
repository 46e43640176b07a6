#pragma once

// Extended ESIS records: a line-oriented view of a document's parse events.
//
//   M<prefix> <uri>                      start prefix mapping
//   m<prefix>                            end prefix mapping
//   A<attname> CDATA <attvalue>          attribute
//   B<namespace> <localname> CDATA <v>   namespaced attribute
//   (<name>                              start element
//   [<namespace> <localname>             start namespaced element
//   )<name>                              end element
//   ]<namespace> <localname>             end namespaced element
//   -<text>                              character content
//   =<text>                              ignorable whitespace
//   ?<target> <data>                     processing instruction
//   X<name>                              skipped entity
//
// Attribute records for an element immediately precede its start record.

#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "esisig/error.hpp"
#include "esisig/events.hpp"
#include "esisig/unicode.hpp"

namespace esisig {

namespace esis {

struct StartMapping {
  std::string prefix;
  std::string uri;
  bool operator==(const StartMapping&) const = default;
};

struct EndMapping {
  std::string prefix;
  bool operator==(const EndMapping&) const = default;
};

struct Attr {
  std::string name;
  std::string value;
  bool operator==(const Attr&) const = default;
};

struct NsAttr {
  std::string ns;
  std::string local;
  std::string value;
  bool operator==(const NsAttr&) const = default;
};

struct StartElem {
  std::string name;
  bool operator==(const StartElem&) const = default;
};

struct StartElemNS {
  std::string ns;
  std::string local;
  bool operator==(const StartElemNS&) const = default;
};

struct EndElem {
  std::string name;
  bool operator==(const EndElem&) const = default;
};

struct EndElemNS {
  std::string ns;
  std::string local;
  bool operator==(const EndElemNS&) const = default;
};

struct Text {
  std::string text;
  bool operator==(const Text&) const = default;
};

struct Ignorable {
  std::string text;
  bool operator==(const Ignorable&) const = default;
};

struct PI {
  std::string target;
  std::string data;
  bool operator==(const PI&) const = default;
};

struct Skipped {
  std::string name;
  bool operator==(const Skipped&) const = default;
};

}  // namespace esis

using EsisRecord =
    std::variant<esis::StartMapping, esis::EndMapping, esis::Attr, esis::NsAttr, esis::StartElem,
                 esis::StartElemNS, esis::EndElem, esis::EndElemNS, esis::Text, esis::Ignorable,
                 esis::PI, esis::Skipped>;

inline char start_char(const EsisRecord& record) {
  static constexpr char kChars[] = {'M', 'm', 'A', 'B', '(', '[', ')', ']', '-', '=', '?', 'X'};
  return kChars[record.index()];
}

template <class T>
concept RecordConsumer = requires(T& consumer, const EsisRecord& record) { consumer(record); };

// Translates document events into records, forwarding each to `Sink`.
// Attributes in the xml: and xmlns: namespaces never become A/B records.
template <RecordConsumer Sink>
class RecordBuilder {
 public:
  explicit RecordBuilder(Sink sink) : sink_(std::move(sink)) {}

  void operator()(const DocEvent& event) {
    std::visit([this](const auto& e) { on(e); }, event);
  }

  Sink& sink() noexcept { return sink_; }

 private:
  void on(const StartDocument&) {}
  void on(const EndDocument&) {}

  void on(const StartElement& e) {
    for (const auto& attr : e.attributes) {
      if (!attr.name.namespace_uri) {
        sink_(EsisRecord{esis::Attr{attr.name.local_name, attr.value}});
      } else if (*attr.name.namespace_uri != kXmlNamespace &&
                 *attr.name.namespace_uri != kXmlnsNamespace) {
        sink_(EsisRecord{esis::NsAttr{*attr.name.namespace_uri, attr.name.local_name, attr.value}});
      }
    }
    if (e.name.namespace_uri) {
      sink_(EsisRecord{esis::StartElemNS{*e.name.namespace_uri, e.name.local_name}});
    } else {
      sink_(EsisRecord{esis::StartElem{e.name.local_name}});
    }
  }

  void on(const EndElement& e) {
    if (e.name.namespace_uri) {
      sink_(EsisRecord{esis::EndElemNS{*e.name.namespace_uri, e.name.local_name}});
    } else {
      sink_(EsisRecord{esis::EndElem{e.name.local_name}});
    }
  }

  void on(const Characters& e) { sink_(EsisRecord{esis::Text{e.text}}); }
  void on(const IgnorableWhitespace& e) { sink_(EsisRecord{esis::Ignorable{e.text}}); }
  void on(const ProcessingInstruction& e) { sink_(EsisRecord{esis::PI{e.target, e.data}}); }
  void on(const StartPrefixMapping& e) { sink_(EsisRecord{esis::StartMapping{e.prefix, e.uri}}); }
  void on(const EndPrefixMapping& e) { sink_(EsisRecord{esis::EndMapping{e.prefix}}); }
  void on(const SkippedEntity& e) { sink_(EsisRecord{esis::Skipped{e.name}}); }

  Sink sink_;
};

struct RecordRecorder {
  std::vector<EsisRecord>* records;
  void operator()(const EsisRecord& record) const { records->push_back(record); }
};

inline std::vector<EsisRecord> events_to_records(const std::vector<DocEvent>& events) {
  std::vector<EsisRecord> records;
  RecordBuilder builder(RecordRecorder{&records});
  for (const auto& event : events) builder(event);
  return records;
}

// ---------------------------------------------------------------------------
// Unnormalized textual form.

namespace detail {

// Line-end characters become \n, \r, \u0085 or \u2028, and a backslash
// becomes \\, so the escaped form is injective.
inline void append_escaped(std::string& out, std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    const char c = s[i];
    if (c == '\n') {
      out += "\\n";
      ++i;
    } else if (c == '\r') {
      out += "\\r";
      ++i;
    } else if (c == '\\') {
      out += "\\\\";
      ++i;
    } else if (s.compare(i, 2, "\xC2\x85") == 0) {
      out += "\\u0085";
      i += 2;
    } else if (s.compare(i, 3, "\xE2\x80\xA8") == 0) {
      out += "\\u2028";
      i += 3;
    } else {
      out.push_back(c);
      ++i;
    }
  }
}

inline std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (i + 1 >= s.size()) throw Error("dangling escape in ESIS line");
    const char next = s[++i];
    if (next == 'n') {
      out.push_back('\n');
    } else if (next == 'r') {
      out.push_back('\r');
    } else if (next == '\\') {
      out.push_back('\\');
    } else if (next == 'u' && s.substr(i + 1, 4) == "0085") {
      out += "\xC2\x85";
      i += 4;
    } else if (next == 'u' && s.substr(i + 1, 4) == "2028") {
      out += "\xE2\x80\xA8";
      i += 4;
    } else {
      throw Error("unknown escape in ESIS line");
    }
  }
  return out;
}

}  // namespace detail

// Renders one record without its line terminator.
inline std::string render_record(const EsisRecord& record) {
  std::string line(1, start_char(record));
  const auto field = [&line](std::string_view s) { detail::append_escaped(line, s); };
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, esis::StartMapping>) {
          field(r.prefix), line += ' ', field(r.uri);
        } else if constexpr (std::is_same_v<T, esis::EndMapping>) {
          field(r.prefix);
        } else if constexpr (std::is_same_v<T, esis::Attr>) {
          line += r.name, line += " CDATA ", field(r.value);
        } else if constexpr (std::is_same_v<T, esis::NsAttr>) {
          field(r.ns), line += ' ', line += r.local, line += " CDATA ", field(r.value);
        } else if constexpr (std::is_same_v<T, esis::StartElem> || std::is_same_v<T, esis::EndElem>) {
          line += r.name;
        } else if constexpr (std::is_same_v<T, esis::StartElemNS> ||
                             std::is_same_v<T, esis::EndElemNS>) {
          field(r.ns), line += ' ', line += r.local;
        } else if constexpr (std::is_same_v<T, esis::Text> || std::is_same_v<T, esis::Ignorable>) {
          field(r.text);
        } else if constexpr (std::is_same_v<T, esis::PI>) {
          line += r.target, line += ' ', field(r.data);
        } else {
          line += r.name;
        }
      },
      record);
  return line;
}

// One line per record, each terminated by '\n'. Diagnostic form; not signed.
inline std::string render_unnormalized(const std::vector<EsisRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    out += render_record(record);
    out += '\n';
  }
  return out;
}

// Parses one rendered line (without terminator) back into a record.
inline EsisRecord parse_record(std::string_view line) {
  if (line.empty()) throw Error("empty ESIS line");
  const char kind = line.front();
  const std::string_view rest = line.substr(1);
  const auto split_first = [&](std::string_view s) {
    const auto sp = s.find(' ');
    if (sp == std::string_view::npos) throw Error("missing field in ESIS line");
    return std::pair{s.substr(0, sp), s.substr(sp + 1)};
  };
  const auto split_last = [&](std::string_view s) {
    const auto sp = s.rfind(' ');
    if (sp == std::string_view::npos) throw Error("missing field in ESIS line");
    return std::pair{s.substr(0, sp), s.substr(sp + 1)};
  };
  constexpr std::string_view kCdata = " CDATA ";
  using detail::unescape;
  switch (kind) {
    case 'M': {
      auto [prefix, uri] = split_first(rest);
      return esis::StartMapping{unescape(prefix), unescape(uri)};
    }
    case 'm':
      return esis::EndMapping{unescape(rest)};
    case 'A': {
      const auto pos = rest.find(kCdata);
      if (pos == std::string_view::npos) throw Error("A record without CDATA");
      return esis::Attr{std::string(rest.substr(0, pos)), unescape(rest.substr(pos + kCdata.size()))};
    }
    case 'B': {
      const auto pos = rest.find(kCdata);
      if (pos == std::string_view::npos) throw Error("B record without CDATA");
      auto [ns, local] = split_last(rest.substr(0, pos));
      return esis::NsAttr{unescape(ns), std::string(local), unescape(rest.substr(pos + kCdata.size()))};
    }
    case '(':
      return esis::StartElem{std::string(rest)};
    case ')':
      return esis::EndElem{std::string(rest)};
    case '[': {
      auto [ns, local] = split_last(rest);
      return esis::StartElemNS{unescape(ns), std::string(local)};
    }
    case ']': {
      auto [ns, local] = split_last(rest);
      return esis::EndElemNS{unescape(ns), std::string(local)};
    }
    case '-':
      return esis::Text{unescape(rest)};
    case '=':
      return esis::Ignorable{unescape(rest)};
    case '?': {
      auto [target, data] = split_first(rest);
      return esis::PI{std::string(target), unescape(data)};
    }
    case 'X':
      return esis::Skipped{std::string(rest)};
    default:
      throw Error(std::string("unknown ESIS record type '") + kind + "'");
  }
}

inline std::vector<EsisRecord> parse_unnormalized(std::string_view text) {
  std::vector<EsisRecord> records;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) throw Error("unterminated ESIS line");
    records.push_back(parse_record(text.substr(0, nl)));
    text.remove_prefix(nl + 1);
  }
  return records;
}

}  // namespace esisig
