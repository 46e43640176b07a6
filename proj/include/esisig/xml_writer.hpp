#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "esisig/events.hpp"

namespace esisig {

inline void append_escaped_text(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '\r':
        out += "&#13;";
        break;
      default:
        out.push_back(c);
    }
  }
}

// Escapes for a double-quoted attribute value; whitespace other than the
// space character is written as a reference so it survives normalization.
inline void append_escaped_attribute(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\t':
        out += "&#9;";
        break;
      case '\n':
        out += "&#10;";
        break;
      case '\r':
        out += "&#13;";
        break;
      default:
        out.push_back(c);
    }
  }
}

// Serializes an event stream as UTF-8 XML without a declaration. Elements
// are always written as start/end tag pairs. Namespaced names use their
// reported prefix; attributes lacking one get the prefix bound to their
// URI in scope.
class XmlWriter {
 public:
  explicit XmlWriter(std::string* out) : out_(out) {}

  void operator()(const DocEvent& event) {
    std::visit([this](const auto& e) { on(e); }, event);
  }

 private:
  void on(const StartDocument&) {}
  void on(const EndDocument&) {}

  void on(const StartPrefixMapping& e) { pending_.push_back(e); }
  void on(const EndPrefixMapping&) {}

  void on(const StartElement& e) {
    scopes_.push_back(pending_.size());
    for (const auto& m : pending_) bindings_.push_back(m);
    std::string& out = *out_;
    out += '<';
    write_name(e.name, true);
    for (const auto& m : pending_) {
      out += m.prefix.empty() ? " xmlns" : " xmlns:";
      out += m.prefix;
      out += "=\"";
      append_escaped_attribute(out, m.uri);
      out += '"';
    }
    pending_.clear();
    for (const auto& a : e.attributes) {
      out += ' ';
      write_name(a.name, false);
      out += "=\"";
      append_escaped_attribute(out, a.value);
      out += '"';
    }
    out += '>';
  }

  void on(const EndElement& e) {
    *out_ += "</";
    write_name(e.name, true);
    *out_ += '>';
    bindings_.resize(bindings_.size() - scopes_.back());
    scopes_.pop_back();
  }

  void on(const Characters& e) { append_escaped_text(*out_, e.text); }
  void on(const IgnorableWhitespace& e) { append_escaped_text(*out_, e.text); }

  void on(const ProcessingInstruction& e) {
    *out_ += "<?";
    *out_ += e.target;
    if (!e.data.empty()) {
      *out_ += ' ';
      *out_ += e.data;
    }
    *out_ += "?>";
  }

  void on(const SkippedEntity& e) {
    *out_ += '&';
    *out_ += e.name;
    *out_ += ';';
  }

  void write_name(const QualifiedName& name, bool element) {
    if (name.prefix && !name.prefix->empty()) {
      *out_ += *name.prefix;
      *out_ += ':';
    } else if (name.namespace_uri && !element) {
      if (*name.namespace_uri == kXmlNamespace) {
        *out_ += "xml:";
      } else {
        for (auto it = bindings_.rbegin(); it != bindings_.rend(); ++it) {
          if (!it->prefix.empty() && it->uri == *name.namespace_uri) {
            *out_ += it->prefix;
            *out_ += ':';
            break;
          }
        }
      }
    }
    *out_ += name.local_name;
  }

  std::string* out_;
  std::vector<StartPrefixMapping> pending_;
  std::vector<StartPrefixMapping> bindings_;
  std::vector<std::size_t> scopes_;
};

}  // namespace esisig
