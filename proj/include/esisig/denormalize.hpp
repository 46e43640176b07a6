#pragma once

// Reconstructs XML from a normalized blob. The result normalizes back to
// the same blob. Namespace URIs are bound to generated prefixes ns1, ns2,
// ... in order of first use, declared on each element where the prefix is
// not already in scope.

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esisig/error.hpp"
#include "esisig/events.hpp"
#include "esisig/normalizer.hpp"
#include "esisig/xml_writer.hpp"

namespace esisig {

namespace detail {

class Denormalizer {
 public:
  explicit Denormalizer(std::string* out) : writer_(out) {}

  void line(std::string_view text, std::size_t number) {
    line_number_ = number;
    if (text.empty()) fail("empty line");
    const char kind = text.front();
    const std::string_view rest = text.substr(1);
    if (!pending_.empty() && kind != 'A' && kind != 'B' && kind != '(' && kind != '[') {
      fail("attribute records not followed by a start record");
    }
    switch (kind) {
      case 'A': {
        auto [name, value] = split_cdata(rest);
        if (name.empty() || name.find(' ') != std::string_view::npos) fail("bad attribute name");
        add_attribute(QualifiedName{std::nullopt, std::string(name), std::nullopt}, value);
        break;
      }
      case 'B': {
        auto [head, value] = split_cdata(rest);
        auto [ns, local] = split_last(head);
        add_attribute(QualifiedName{std::string(ns), std::string(local), std::nullopt}, value);
        break;
      }
      case '(':
        if (rest.empty() || rest.find(' ') != std::string_view::npos) fail("bad element name");
        start(QualifiedName{std::nullopt, std::string(rest), std::nullopt});
        break;
      case '[': {
        auto [ns, local] = split_last(rest);
        start(QualifiedName{std::string(ns), std::string(local), std::nullopt});
        break;
      }
      case ')':
        end(QualifiedName{std::nullopt, std::string(rest), std::nullopt});
        break;
      case ']': {
        auto [ns, local] = split_last(rest);
        end(QualifiedName{std::string(ns), std::string(local), std::nullopt});
        break;
      }
      case '-':
        if (open_.empty()) fail("text outside the root element");
        writer_(DocEvent{Characters{std::string(rest)}});
        break;
      case '?': {
        const auto sp = rest.find(' ');
        if (sp == 0 || sp == std::string_view::npos) fail("bad processing instruction");
        writer_(DocEvent{ProcessingInstruction{std::string(rest.substr(0, sp)), std::string(rest.substr(sp + 1))}});
        break;
      }
      default:
        fail(std::string("unknown record type '") + kind + "'");
    }
  }

  void finish() {
    if (!pending_.empty()) fail("attribute records at end of blob");
    if (!open_.empty()) fail("unclosed element at end of blob");
    if (!root_seen_) fail("no root element");
    writer_(DocEvent{EndDocument{}});
  }

 private:
  struct Open {
    QualifiedName name;
    std::vector<std::string> declared;
  };

  [[noreturn]] void fail(const std::string& message) const {
    throw MalformedBlobError("line " + std::to_string(line_number_) + ": " + message);
  }

  std::pair<std::string_view, std::string_view> split_cdata(std::string_view rest) const {
    constexpr std::string_view kCdata = " CDATA ";
    const auto pos = rest.find(kCdata);
    if (pos == std::string_view::npos) fail("attribute record without CDATA");
    return {rest.substr(0, pos), rest.substr(pos + kCdata.size())};
  }

  std::pair<std::string_view, std::string_view> split_last(std::string_view s) const {
    const auto sp = s.rfind(' ');
    if (sp == std::string_view::npos || sp == 0 || sp + 1 == s.size()) fail("expected namespace and local name");
    return {s.substr(0, sp), s.substr(sp + 1)};
  }

  void add_attribute(QualifiedName name, std::string_view value) {
    for (const auto& a : pending_) {
      if (a.name.same_expanded_name(name)) fail("duplicate attribute " + name.local_name);
    }
    pending_.push_back(Attribute{std::move(name), std::string(value)});
  }

  const std::string& prefix_for(const std::string& uri) {
    auto [it, inserted] = prefixes_.try_emplace(uri);
    if (inserted) it->second = "ns" + std::to_string(prefixes_.size());
    return it->second;
  }

  void bind(const std::string& uri, std::vector<std::string>& declared) {
    const std::string& prefix = prefix_for(uri);
    int& count = in_scope_[prefix];
    if (count > 0) return;
    ++count;
    declared.push_back(prefix);
    writer_(DocEvent{StartPrefixMapping{prefix, uri}});
  }

  void start(QualifiedName name) {
    if (open_.empty() && root_seen_) fail("second root element");
    if (!root_seen_) writer_(DocEvent{StartDocument{}});
    root_seen_ = true;
    Open entry{name, {}};
    if (name.namespace_uri) bind(*name.namespace_uri, entry.declared);
    for (const auto& a : pending_) {
      if (a.name.namespace_uri) bind(*a.name.namespace_uri, entry.declared);
    }
    StartElement event{std::move(name), std::move(pending_)};
    pending_.clear();
    if (event.name.namespace_uri) event.name.prefix = prefixes_.at(*event.name.namespace_uri);
    for (auto& a : event.attributes) {
      if (a.name.namespace_uri) a.name.prefix = prefixes_.at(*a.name.namespace_uri);
    }
    entry.name = event.name;
    writer_(DocEvent{std::move(event)});
    open_.push_back(std::move(entry));
  }

  void end(QualifiedName name) {
    if (open_.empty()) fail("end record without start");
    Open& top = open_.back();
    if (!top.name.same_expanded_name(name)) fail("end record does not match start " + top.name.local_name);
    writer_(DocEvent{EndElement{top.name}});
    for (auto it = top.declared.rbegin(); it != top.declared.rend(); ++it) {
      --in_scope_[*it];
      writer_(DocEvent{EndPrefixMapping{*it}});
    }
    open_.pop_back();
  }

  XmlWriter writer_;
  std::vector<Attribute> pending_;
  std::vector<Open> open_;
  std::map<std::string, std::string> prefixes_;
  std::map<std::string, int> in_scope_;
  bool root_seen_ = false;
  std::size_t line_number_ = 0;
};

}  // namespace detail

inline std::string denormalize(std::string_view blob) {
  std::string out;
  detail::Denormalizer d(&out);
  std::size_t number = 0;
  while (!blob.empty()) {
    ++number;
    const auto crlf = blob.find("\r\n");
    if (crlf == std::string_view::npos) {
      throw MalformedBlobError("line " + std::to_string(number) + ": missing CRLF terminator");
    }
    const auto text = blob.substr(0, crlf);
    if (text.find_first_of("\r\n") != std::string_view::npos) {
      throw MalformedBlobError("line " + std::to_string(number) + ": stray line-end byte");
    }
    d.line(text, number);
    blob.remove_prefix(crlf + 2);
  }
  d.finish();
  return out;
}

inline std::string denormalize(const NormalizedBlob& blob) { return denormalize(std::string_view(blob.bytes)); }

}  // namespace esisig
