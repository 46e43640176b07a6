#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace esisig {

inline constexpr std::string_view kXmlNamespace = "http://www.w3.org/XML/1998/namespace";
inline constexpr std::string_view kXmlnsNamespace = "http://www.w3.org/2000/xmlns/";

// An element or attribute name after namespace processing. The prefix is
// informational; two names denote the same thing when the URI and local
// name are equal as character sequences.
struct QualifiedName {
  std::optional<std::string> namespace_uri;
  std::string local_name;
  std::optional<std::string> prefix;

  bool operator==(const QualifiedName&) const = default;

  bool same_expanded_name(const QualifiedName& other) const {
    return namespace_uri == other.namespace_uri && local_name == other.local_name;
  }

  // prefix:local, or local when unprefixed.
  std::string qname() const {
    if (prefix && !prefix->empty()) return *prefix + ":" + local_name;
    return local_name;
  }
};

struct Attribute {
  QualifiedName name;
  std::string value;

  bool operator==(const Attribute&) const = default;
};

struct StartDocument {
  bool operator==(const StartDocument&) const = default;
};

struct EndDocument {
  bool operator==(const EndDocument&) const = default;
};

struct StartElement {
  QualifiedName name;
  std::vector<Attribute> attributes;

  bool operator==(const StartElement&) const = default;
};

struct EndElement {
  QualifiedName name;

  bool operator==(const EndElement&) const = default;
};

struct Characters {
  std::string text;

  bool operator==(const Characters&) const = default;
};

struct IgnorableWhitespace {
  std::string text;

  bool operator==(const IgnorableWhitespace&) const = default;
};

struct ProcessingInstruction {
  std::string target;
  std::string data;

  bool operator==(const ProcessingInstruction&) const = default;
};

// An empty prefix maps the default namespace.
struct StartPrefixMapping {
  std::string prefix;
  std::string uri;

  bool operator==(const StartPrefixMapping&) const = default;
};

struct EndPrefixMapping {
  std::string prefix;

  bool operator==(const EndPrefixMapping&) const = default;
};

struct SkippedEntity {
  std::string name;

  bool operator==(const SkippedEntity&) const = default;
};

using DocEvent = std::variant<StartDocument, EndDocument, StartElement, EndElement, Characters,
                              IgnorableWhitespace, ProcessingInstruction, StartPrefixMapping,
                              EndPrefixMapping, SkippedEntity>;

// Anything that accepts a stream of document events.
template <class T>
concept EventConsumer = requires(T& consumer, const DocEvent& event) { consumer(event); };

// Collects events into a vector.
struct EventRecorder {
  std::vector<DocEvent>* events;
  void operator()(const DocEvent& event) const { events->push_back(event); }
};

// Discards events; for verifying or digesting without a downstream.
struct NullConsumer {
  void operator()(const DocEvent&) const noexcept {}
};

}  // namespace esisig
