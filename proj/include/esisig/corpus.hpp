#pragma once

// Test corpus tooling: a seeded generator of non-pathological XML (roughly
// even markup and text, random nesting up to ten levels), mutations that
// either preserve or break normalization equivalence, and the
// identity-transform benchmark comparing plain Expat to the signing filter.

#include <expat.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esisig/digest.hpp"
#include "esisig/error.hpp"
#include "esisig/filter.hpp"
#include "esisig/normalizer.hpp"
#include "esisig/parser.hpp"
#include "esisig/signature_pi.hpp"
#include "esisig/unicode.hpp"
#include "esisig/xml_writer.hpp"

namespace esisig::corpus {

// ---------------------------------------------------------------------------
// Random source. std::mt19937_64 output is fully specified by the standard;
// the helpers below avoid the implementation-defined distributions so a
// seed yields identical documents everywhere.

class Random {
 public:
  explicit Random(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
  bool chance(unsigned percent) { return below(100) < percent; }

  template <class Container>
  const auto& pick(const Container& c) {
    return c[static_cast<std::size_t>(below(std::size(c)))];
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Generation

struct CorpusSpec {
  std::size_t target_bytes = 64 * 1024;
  std::size_t max_depth = 10;
  // Approximate share of output bytes that is markup rather than text.
  double markup_ratio = 0.5;
  std::uint64_t seed = 1;
};

namespace detail {

inline constexpr std::array kElementNames = {
    "item",   "name",   "description", "text",    "keyword", "bold",     "emph",    "person",
    "region", "africa", "asia",        "europe",  "payment", "location", "quantity", "shipping",
    "mail",   "from",   "to",          "date",    "listitem", "parlist", "category", "edge",
    "bidder", "increase", "price",     "seller",  "annotation", "author", "happiness", "interval"};

inline constexpr std::array kAttributeNames = {"id",     "category", "featured", "income",
                                               "person", "item",     "open",     "currency"};

inline constexpr std::array kWords = {
    "auction", "gold",    "price",  "bid",     "seller",   "ship",     "quick",   "brown",
    "fox",     "lazy",    "dog",    "market",  "open",     "closed",   "reserve", "bidder",
    "wrapped", "antique", "silver", "mint",    "vintage",  "rare",     "offer",   "accepted",
    "fine",    "signed",  "first",  "edition", "purchase", "delivery", "europe",  "asia"};

// Non-ASCII fragments, including a supplementary-plane character and
// characters that are spaces in Unicode but not collapsible here.
inline constexpr std::array kNonAscii = {"caf\xC3\xA9",    "\xC3\xBC" "ber", "Stra\xC3\x9F" "e",
                                         "\xC2\xA9",       "a\xC2\xA0" "b",  "\xE2\x80\x94",
                                         "\xE6\x97\xA5\xE6\x9C\xAC", "\xF0\x9D\x84\x9E",
                                         "\xE2\x86\x92"};

inline constexpr std::array kEntityRefs = {"&amp;", "&lt;", "&gt;", "&apos;", "&quot;",
                                           "&#233;", "&#x2014;", "&#9;", "&#10;"};

struct Namespace {
  const char* uri;
  const char* prefix;
};

inline constexpr std::array kNamespaces = {Namespace{"urn:example:auction", "au"},
                                           Namespace{"http://example.org/people", "pp"},
                                           Namespace{"urn:x-test:catalog", "cat"}};

class Generator {
 public:
  explicit Generator(const CorpusSpec& spec) : spec_(spec), random_(spec.seed) {
    text_percent_ = static_cast<unsigned>(std::clamp(100.0 * (1.0 - spec.markup_ratio), 5.0, 95.0));
  }

  std::string run() {
    out_.reserve(spec_.target_bytes + spec_.target_bytes / 8);
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (random_.chance(50)) out_ += "<!-- generated corpus document -->\n";
    if (random_.chance(30)) out_ += "<?app-meta version='2'?>\n";
    scopes_.emplace_back();
    out_ += "<site";
    if (random_.chance(50)) declare(out_, kNamespaces[0], scopes_.back());
    out_ += '>';
    while (out_.size() < spec_.target_bytes) {
      whitespace();
      element(2);
    }
    out_ += "\n</site>\n";
    return std::move(out_);
  }

 private:
  using Scope = std::vector<std::pair<std::string, std::string>>;  // prefix -> uri

  bool in_scope(const Namespace& ns) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      for (const auto& [prefix, uri] : *it) {
        if (prefix == ns.prefix) return uri == ns.uri;
      }
    }
    return false;
  }

  void declare(std::string& tag, const Namespace& ns, Scope& scope) {
    tag += " xmlns:";
    tag += ns.prefix;
    tag += "=\"";
    tag += ns.uri;
    tag += '"';
    scope.emplace_back(ns.prefix, ns.uri);
  }

  void whitespace() {
    switch (random_.below(4)) {
      case 0:
        break;
      case 1:
        out_ += '\n';
        break;
      case 2:
        out_ += "\n";
        out_.append(static_cast<std::size_t>(random_.below(8)), ' ');
        break;
      default:
        out_ += "\r\n\t";
    }
  }

  void word_text(std::string& out, std::size_t words, bool attribute) {
    for (std::size_t i = 0; i < words; ++i) {
      if (i > 0) {
        const auto r = random_.below(10);
        if (r == 0 && !attribute) {
          out += "\n  ";
        } else if (r == 1) {
          out += "  ";
        } else if (r == 2) {
          out += '\t';
        } else {
          out += ' ';
        }
      }
      const auto r = random_.below(20);
      if (r == 0) {
        out += random_.pick(kNonAscii);
      } else if (r == 1) {
        out += random_.pick(kEntityRefs);
      } else {
        out += random_.pick(kWords);
      }
    }
  }

  // Word text never contains a literal quote character, so either quote works.
  void attribute_value(std::string& tag) { word_text(tag, 1 + random_.below(3), true); }

  void element(std::size_t depth) {
    scopes_.emplace_back();
    std::string name;
    std::string tag = "<";
    if (random_.chance(20)) {
      const auto& ns = random_.pick(kNamespaces);
      name = std::string(ns.prefix) + ":" + random_.pick(kElementNames);
      tag += name;
      if (!in_scope(ns)) declare(tag, ns, scopes_.back());
    } else {
      name = random_.pick(kElementNames);
      tag += name;
      if (random_.chance(3)) {
        tag += " xmlns=\"urn:x-test:default\"";
      }
    }
    const auto attributes = random_.below(4);
    std::vector<std::string> used;
    for (std::uint64_t i = 0; i < attributes; ++i) {
      std::string attr_name;
      if (random_.chance(15)) {
        const auto& ns = random_.pick(kNamespaces);
        if (!in_scope(ns)) declare(tag, ns, scopes_.back());
        attr_name = std::string(ns.prefix) + ":" + random_.pick(kAttributeNames);
      } else if (random_.chance(4)) {
        attr_name = "xml:lang";
      } else {
        attr_name = random_.pick(kAttributeNames);
      }
      if (std::find(used.begin(), used.end(), attr_name) != used.end()) continue;
      used.push_back(attr_name);
      const char quote = random_.chance(50) ? '"' : '\'';
      tag += (random_.chance(10) ? "\n    " : " ");
      tag += attr_name;
      tag += '=';
      tag += quote;
      if (attr_name == "xml:lang") {
        tag += "en";
      } else {
        attribute_value(tag);
      }
      tag += quote;
    }
    out_ += tag;

    // Children: text and elements; deeper levels become less likely.
    const bool may_nest = depth < spec_.max_depth && random_.below(spec_.max_depth) + 1 >= depth / 2;
    const auto children = may_nest ? random_.below(6) : 0;
    if (children == 0 && random_.chance(40)) {
      out_ += "/>";
      scopes_.pop_back();
      return;
    }
    out_ += '>';
    const auto chunks = children == 0 ? 1 : children + 1;
    for (std::uint64_t i = 0; i < chunks && out_.size() < spec_.target_bytes; ++i) {
      if (random_.chance(text_percent_)) content();
      if (i + 1 < chunks) {
        whitespace();
        element(depth + 1);
      }
    }
    out_ += "</";
    out_ += name;
    out_ += '>';
    scopes_.pop_back();
  }

  void content() {
    const auto r = random_.below(100);
    if (r < 4) {
      out_ += "<![CDATA[";
      std::string raw;
      word_text(raw, 2 + random_.below(4), true);
      // Entity references are literal text inside CDATA; keep it ASCII-only.
      for (char c : raw) {
        if (static_cast<unsigned char>(c) < 0x80) out_ += c;
      }
      out_ += " <raw> & ]]>";
    } else if (r < 7) {
      out_ += "<!-- note ";
      out_ += random_.pick(kWords);
      out_ += " -->";
    } else if (r < 9) {
      out_ += "<?app-hint ";
      out_ += random_.pick(kWords);
      out_ += "  ?>";
    }
    word_text(out_, 3 + random_.below(25), false);
  }

  CorpusSpec spec_;
  Random random_;
  unsigned text_percent_;
  std::string out_;
  std::vector<Scope> scopes_;
};

}  // namespace detail

// Deterministic for a given spec. The root element is <site>; elements nest
// at most spec.max_depth deep (the root is depth 1).
inline std::string generate(const CorpusSpec& spec) {
  if (spec.max_depth < 2) throw Error("max_depth must be at least 2");
  return detail::Generator(spec).run();
}

// ---------------------------------------------------------------------------
// A lossy-but-equivalent tree: raw qualified names, namespace declarations
// as ordinary attributes in document order, text, CDATA, comments and PIs.

struct TreeAttribute {
  std::string name;
  std::string value;
  // Byte offsets of code points to write as numeric character references.
  std::vector<std::size_t> refs;
  char quote = 0;  // as found in the source; 0 if unknown
};

struct TreeNode {
  enum class Kind { element, text, cdata, comment, pi };

  Kind kind = Kind::element;
  std::string name;   // element qname or PI target
  std::string value;  // text, CDATA, comment or PI data
  std::vector<TreeAttribute> attributes;
  std::vector<TreeNode> children;
  std::vector<std::size_t> refs;

  bool is_element() const { return kind == Kind::element; }
};

struct Tree {
  // Prolog and epilog comments and PIs plus exactly one element.
  std::vector<TreeNode> top;

  TreeNode& root() {
    for (auto& n : top) {
      if (n.is_element()) return n;
    }
    throw Error("tree has no root element");
  }
};

namespace detail {

class TreeBuilder {
 public:
  Tree build(std::string_view xml) {
    source_ = xml;
    std::unique_ptr<XML_ParserStruct, esisig::detail::ExpatDeleter> parser(XML_ParserCreate(nullptr));
    XML_Parser p = parser.get();
    parser_ = p;
    XML_SetUserData(p, this);
    XML_SetElementHandler(p, &TreeBuilder::on_start, &TreeBuilder::on_end);
    XML_SetCharacterDataHandler(p, &TreeBuilder::on_chars);
    XML_SetCdataSectionHandler(p, &TreeBuilder::on_cdata_start, &TreeBuilder::on_cdata_end);
    XML_SetCommentHandler(p, &TreeBuilder::on_comment);
    XML_SetProcessingInstructionHandler(p, &TreeBuilder::on_pi);
    stack_.push_back(&document_);
    if (XML_Parse(p, xml.data(), static_cast<int>(xml.size()), 1) == XML_STATUS_ERROR) {
      throw WellFormednessError(XML_ErrorString(XML_GetErrorCode(p)),
                                static_cast<std::uint64_t>(XML_GetCurrentLineNumber(p)),
                                static_cast<std::uint64_t>(XML_GetCurrentColumnNumber(p)),
                                XML_GetCurrentByteIndex(p));
    }
    return Tree{std::move(document_.children)};
  }

 private:
  static TreeBuilder& self(void* p) { return *static_cast<TreeBuilder*>(p); }

  TreeNode& current() { return *stack_.back(); }

  static void XMLCALL on_start(void* u, const XML_Char* name, const XML_Char** atts) {
    auto& s = self(u);
    TreeNode node;
    node.name = name;
    for (; *atts != nullptr; atts += 2) node.attributes.push_back({atts[0], atts[1], {}, 0});
    s.record_quotes(node);
    s.current().children.push_back(std::move(node));
    s.stack_.push_back(&s.current().children.back());
  }

  static void XMLCALL on_end(void* u, const XML_Char*) { self(u).stack_.pop_back(); }

  static void XMLCALL on_chars(void* u, const XML_Char* text, int len) {
    auto& s = self(u);
    auto& children = s.current().children;
    const auto kind = s.in_cdata_ ? TreeNode::Kind::cdata : TreeNode::Kind::text;
    if (!s.fresh_cdata_ && !children.empty() && children.back().kind == kind) {
      children.back().value.append(text, static_cast<std::size_t>(len));
      return;
    }
    s.fresh_cdata_ = false;
    TreeNode node;
    node.kind = kind;
    node.value.assign(text, static_cast<std::size_t>(len));
    children.push_back(std::move(node));
  }

  static void XMLCALL on_cdata_start(void* u) {
    auto& s = self(u);
    s.in_cdata_ = true;
    s.fresh_cdata_ = true;
  }

  static void XMLCALL on_cdata_end(void* u) {
    auto& s = self(u);
    s.in_cdata_ = false;
    s.fresh_cdata_ = false;
  }

  static void XMLCALL on_comment(void* u, const XML_Char* data) {
    TreeNode node;
    node.kind = TreeNode::Kind::comment;
    node.value = data;
    self(u).current().children.push_back(std::move(node));
  }

  static void XMLCALL on_pi(void* u, const XML_Char* target, const XML_Char* data) {
    TreeNode node;
    node.kind = TreeNode::Kind::pi;
    node.name = target;
    node.value = data;
    self(u).current().children.push_back(std::move(node));
  }

  // Recovers each attribute's quote character from the raw start tag. Only
  // attempted for ASCII-compatible input.
  void record_quotes(TreeNode& node) {
    if (node.attributes.empty() || source_.empty() || source_[0] == '\xFE' || source_[0] == '\xFF' ||
        source_[0] == '\0' || (source_.size() > 1 && source_[1] == '\0')) {
      return;
    }
    const auto at = XML_GetCurrentByteIndex(parser_);
    const auto count = XML_GetCurrentByteCount(parser_);
    if (at < 0 || count <= 0 || static_cast<std::size_t>(at + count) > source_.size()) return;
    const std::string_view tag = source_.substr(static_cast<std::size_t>(at), static_cast<std::size_t>(count));
    std::size_t i = 0;
    for (auto& a : node.attributes) {
      i = tag.find('=', i);
      if (i == std::string_view::npos) return;
      i = tag.find_first_of("'\"", i);
      if (i == std::string_view::npos) return;
      a.quote = tag[i];
      i = tag.find(a.quote, i + 1);
      if (i == std::string_view::npos) return;
      ++i;
    }
  }

  std::string_view source_;
  XML_Parser parser_ = nullptr;
  TreeNode document_;
  std::vector<TreeNode*> stack_;
  bool in_cdata_ = false;
  bool fresh_cdata_ = false;
};

}  // namespace detail

inline Tree parse_tree(std::string_view xml) { return detail::TreeBuilder().build(xml); }

enum class OutputEncoding { utf8, utf16le, utf16be, latin1 };

struct SerializeStyle {
  // Used for attributes whose original quote is unknown.
  char quote = '"';
  bool swap_quotes = false;
  OutputEncoding encoding = OutputEncoding::utf8;
};

namespace detail {

class TreeWriter {
 public:
  explicit TreeWriter(SerializeStyle style) : style_(style) {}

  std::string write(const Tree& tree) {
    const char* label = "UTF-8";
    if (style_.encoding == OutputEncoding::utf16le || style_.encoding == OutputEncoding::utf16be) {
      label = "UTF-16";
    } else if (style_.encoding == OutputEncoding::latin1) {
      label = "ISO-8859-1";
    }
    out_ = "<?xml version=\"1.0\" encoding=\"";
    out_ += label;
    out_ += "\"?>\n";
    for (const auto& node : tree.top) {
      write_node(node);
      out_ += '\n';
    }
    switch (style_.encoding) {
      case OutputEncoding::utf8:
        return std::move(out_);
      case OutputEncoding::utf16le:
        return "\xFF\xFE" + unicode::utf8_to_utf16(out_, true);
      case OutputEncoding::utf16be:
        return "\xFE\xFF" + unicode::utf8_to_utf16(out_, false);
      case OutputEncoding::latin1:
        if (auto bytes = unicode::utf8_to_latin1(out_)) return *bytes;
        throw NotApplicable("document is not representable in ISO-8859-1");
    }
    return {};
  }

 private:
  bool latin1() const { return style_.encoding == OutputEncoding::latin1; }

  void raw(std::string_view s) {
    if (latin1() && !unicode::utf8_to_latin1(s)) throw NotApplicable("markup not representable in ISO-8859-1");
    out_ += s;
  }

  void char_ref(char32_t cp) {
    out_ += "&#";
    out_ += std::to_string(static_cast<std::uint32_t>(cp));
    out_ += ';';
  }

  void escaped(std::string_view s, const std::vector<std::size_t>& refs, bool attribute) {
    for (std::size_t i = 0; i < s.size();) {
      const std::size_t at = i;
      const char32_t cp = unicode::decode_utf8(s, i);
      const bool forced = std::find(refs.begin(), refs.end(), at) != refs.end();
      if (forced || (latin1() && cp > 0xFF)) {
        char_ref(cp);
        continue;
      }
      switch (cp) {
        case '&':
          out_ += "&amp;";
          break;
        case '<':
          out_ += "&lt;";
          break;
        case '>':
          out_ += attribute ? ">" : "&gt;";
          break;
        case '\r':
          out_ += "&#13;";
          break;
        case '\t':
        case '\n':
          if (attribute) {
            char_ref(cp);
          } else {
            out_ += static_cast<char>(cp);
          }
          break;
        default:
          if (attribute && cp == static_cast<char32_t>(quote_)) {
            out_ += quote_ == '"' ? "&quot;" : "&apos;";
          } else {
            out_.append(s.substr(at, i - at));
          }
      }
    }
  }

  void write_node(const TreeNode& node) {
    switch (node.kind) {
      case TreeNode::Kind::element:
        out_ += '<';
        raw(node.name);
        for (const auto& a : node.attributes) {
          out_ += ' ';
          raw(a.name);
          out_ += '=';
          quote_ = a.quote != 0 ? a.quote : style_.quote;
          if (style_.swap_quotes) quote_ = quote_ == '"' ? '\'' : '"';
          out_ += quote_;
          escaped(a.value, a.refs, true);
          out_ += quote_;
        }
        if (node.children.empty()) {
          out_ += "/>";
          return;
        }
        out_ += '>';
        for (const auto& child : node.children) write_node(child);
        out_ += "</";
        out_ += node.name;
        out_ += '>';
        return;
      case TreeNode::Kind::text:
        escaped(node.value, node.refs, false);
        return;
      case TreeNode::Kind::cdata:
        if (latin1() && !unicode::utf8_to_latin1(node.value)) {
          escaped(node.value, node.refs, false);
        } else {
          out_ += "<![CDATA[";
          out_ += node.value;
          out_ += "]]>";
        }
        return;
      case TreeNode::Kind::comment:
        out_ += "<!--";
        raw(node.value);
        out_ += "-->";
        return;
      case TreeNode::Kind::pi:
        out_ += "<?";
        raw(node.name);
        if (!node.value.empty()) {
          out_ += ' ';
          raw(node.value);
        }
        out_ += "?>";
        return;
    }
  }

  SerializeStyle style_;
  char quote_ = '"';
  std::string out_;
};

}  // namespace detail

inline std::string serialize_tree(const Tree& tree, SerializeStyle style = {}) {
  return detail::TreeWriter(style).write(tree);
}

// ---------------------------------------------------------------------------
// Mutations

enum class MutationKind {
  // Preserve the normalized blob.
  quote_swap,
  attr_permute,
  re_encode,
  char_ref_substitute,
  interelement_whitespace,
  signature_pi_churn,
  prefix_rename,
  // Change it.
  text_edit,
  attvalue_edit,
  name_edit,
  nsuri_edit,
};

inline constexpr std::array kPreservingMutations = {
    MutationKind::quote_swap,          MutationKind::attr_permute,
    MutationKind::re_encode,           MutationKind::char_ref_substitute,
    MutationKind::interelement_whitespace, MutationKind::signature_pi_churn,
    MutationKind::prefix_rename};

inline constexpr std::array kBreakingMutations = {MutationKind::text_edit, MutationKind::attvalue_edit,
                                                  MutationKind::name_edit, MutationKind::nsuri_edit};

inline bool preserves_equivalence(MutationKind kind) {
  return std::find(kPreservingMutations.begin(), kPreservingMutations.end(), kind) !=
         kPreservingMutations.end();
}

inline std::string_view mutation_name(MutationKind kind) {
  switch (kind) {
    case MutationKind::quote_swap:
      return "quote-swap";
    case MutationKind::attr_permute:
      return "attr-permute";
    case MutationKind::re_encode:
      return "re-encode";
    case MutationKind::char_ref_substitute:
      return "char-ref-substitute";
    case MutationKind::interelement_whitespace:
      return "interelement-whitespace";
    case MutationKind::signature_pi_churn:
      return "signature-pi-churn";
    case MutationKind::prefix_rename:
      return "prefix-rename";
    case MutationKind::text_edit:
      return "text-edit";
    case MutationKind::attvalue_edit:
      return "attvalue-edit";
    case MutationKind::name_edit:
      return "name-edit";
    case MutationKind::nsuri_edit:
      return "nsuri-edit";
  }
  return "";
}

struct Mutation {
  MutationKind kind;
  // Chooses among the places the mutation could apply.
  std::uint64_t seed = 0;
};

namespace detail {

inline void for_each_element(TreeNode& node, const std::function<void(TreeNode&)>& f) {
  if (!node.is_element()) return;
  f(node);
  for (auto& child : node.children) for_each_element(child, f);
}

inline bool is_namespace_declaration(std::string_view name) {
  return name == "xmlns" || name.starts_with("xmlns:");
}

inline bool is_blank(std::string_view s) {
  for (std::size_t i = 0; i < s.size();) {
    const std::size_t len = unicode::collapsible_length(s, i);
    if (len == 0) return false;
    i += len;
  }
  return true;
}

inline std::string prefix_of(std::string_view qname) {
  const auto colon = qname.find(':');
  return colon == std::string_view::npos ? std::string() : std::string(qname.substr(0, colon));
}

inline std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < s.size();) {
    offsets.push_back(i);
    unicode::decode_utf8(s, i);
  }
  return offsets;
}

template <class T>
T& choose(Random& random, std::vector<T*>& candidates, const char* what) {
  if (candidates.empty()) throw NotApplicable(std::string("document has no ") + what);
  return *candidates[static_cast<std::size_t>(random.below(candidates.size()))];
}

inline void rename_prefix(TreeNode& node, const std::string& from, const std::string& to, bool top) {
  if (!node.is_element()) return;
  if (!top) {
    for (const auto& a : node.attributes) {
      if (a.name == "xmlns:" + from) return;  // rebinds `from` for this subtree
    }
  }
  if (prefix_of(node.name) == from) node.name = to + node.name.substr(from.size());
  for (auto& a : node.attributes) {
    if (a.name == "xmlns:" + from) {
      a.name = "xmlns:" + to;
    } else if (prefix_of(a.name) == from) {
      a.name = to + a.name.substr(from.size());
    }
  }
  for (auto& child : node.children) rename_prefix(child, from, to, false);
}

inline void collect_prefixes(const TreeNode& node, std::set<std::string>& prefixes) {
  if (!node.is_element()) return;
  prefixes.insert(prefix_of(node.name));
  for (const auto& a : node.attributes) {
    prefixes.insert(prefix_of(a.name));
    if (a.name.starts_with("xmlns:")) prefixes.insert(a.name.substr(6));
  }
  for (const auto& c : node.children) collect_prefixes(c, prefixes);
}

inline std::string random_whitespace(Random& random) {
  static constexpr std::array kPieces = {" ", "\n", "\t", "  ", "\n    "};
  std::string ws;
  const auto n = 1 + random.below(4);
  for (std::uint64_t i = 0; i < n; ++i) ws += random.pick(kPieces);
  return ws;
}

inline std::string random_signature_data(Random& random) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string content;
  for (int i = 0; i < 40; ++i) content += kHex[random.below(16)];
  std::string data = "algorithm='sha1' content='" + content + "'";
  if (random.chance(30)) data += " target='following::*[1]'";
  return data;
}

// A node is a "hard" neighbor for whitespace insertion if it keeps the
// whitespace from merging with real text: elements only.
inline bool hard_neighbor(const std::vector<TreeNode>& children, std::ptrdiff_t i) {
  if (i < 0 || i >= static_cast<std::ptrdiff_t>(children.size())) return true;
  return children[static_cast<std::size_t>(i)].is_element();
}

struct WhitespaceSlot {
  TreeNode* parent;
  std::size_t index;  // insertion point, or the blank node to replace
  bool replace;
};

inline void apply(Tree& tree, const Mutation& mutation) {
  Random random(mutation.seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(mutation.kind));
  TreeNode& root = tree.root();

  std::vector<TreeNode*> elements;
  for_each_element(root, [&](TreeNode& n) { elements.push_back(&n); });

  switch (mutation.kind) {
    case MutationKind::quote_swap:
    case MutationKind::re_encode:
      return;  // handled by the serializer style

    case MutationKind::attr_permute: {
      std::vector<TreeNode*> candidates;
      for (auto* e : elements) {
        if (e->attributes.size() >= 2) candidates.push_back(e);
      }
      auto& e = choose(random, candidates, "element with two or more attributes");
      auto& attrs = e.attributes;
      const auto original = attrs;
      // Fisher-Yates until the order actually changes.
      do {
        for (std::size_t i = attrs.size() - 1; i > 0; --i) {
          std::swap(attrs[i], attrs[static_cast<std::size_t>(random.below(i + 1))]);
        }
      } while (std::equal(attrs.begin(), attrs.end(), original.begin(),
                          [](const auto& a, const auto& b) { return a.name == b.name; }));
      return;
    }

    case MutationKind::char_ref_substitute: {
      struct Target {
        std::string* value;
        std::vector<std::size_t>* refs;
      };
      std::vector<Target> targets;
      for (auto* e : elements) {
        for (auto& a : e->attributes) {
          if (!a.value.empty()) targets.push_back({&a.value, &a.refs});
        }
        for (auto& c : e->children) {
          if (c.kind == TreeNode::Kind::text && !c.value.empty()) targets.push_back({&c.value, &c.refs});
        }
      }
      if (targets.empty()) throw NotApplicable("document has no text or attribute values");
      const auto substitutions = 1 + random.below(4);
      for (std::uint64_t k = 0; k < substitutions; ++k) {
        auto& t = targets[static_cast<std::size_t>(random.below(targets.size()))];
        const auto offsets = code_point_offsets(*t.value);
        t.refs->push_back(offsets[static_cast<std::size_t>(random.below(offsets.size()))]);
      }
      return;
    }

    case MutationKind::interelement_whitespace: {
      std::vector<WhitespaceSlot> slots;
      for (auto* e : elements) {
        auto& ch = e->children;
        bool has_element_child = false;
        for (const auto& c : ch) has_element_child |= c.is_element();
        if (!has_element_child) continue;
        const auto n = static_cast<std::ptrdiff_t>(ch.size());
        for (std::ptrdiff_t i = 0; i <= n; ++i) {
          if (hard_neighbor(ch, i - 1) && hard_neighbor(ch, i)) {
            slots.push_back({e, static_cast<std::size_t>(i), false});
          }
          if (i < n && ch[static_cast<std::size_t>(i)].kind == TreeNode::Kind::text &&
              is_blank(ch[static_cast<std::size_t>(i)].value) && hard_neighbor(ch, i - 1) &&
              hard_neighbor(ch, i + 1)) {
            slots.push_back({e, static_cast<std::size_t>(i), true});
          }
        }
      }
      if (slots.empty()) throw NotApplicable("document has no gap between elements");
      const auto& slot = slots[static_cast<std::size_t>(random.below(slots.size()))];
      auto& ch = slot.parent->children;
      if (slot.replace) {
        if (random.chance(50)) {
          ch.erase(ch.begin() + static_cast<std::ptrdiff_t>(slot.index));
        } else {
          ch[slot.index].value = random_whitespace(random);
          ch[slot.index].refs.clear();
        }
      } else {
        TreeNode ws;
        ws.kind = TreeNode::Kind::text;
        ws.value = random_whitespace(random);
        ch.insert(ch.begin() + static_cast<std::ptrdiff_t>(slot.index), std::move(ws));
      }
      return;
    }

    case MutationKind::signature_pi_churn: {
      struct Existing {
        std::vector<TreeNode>* siblings;
        std::size_t index;
      };
      std::vector<Existing> existing;
      for (auto* e : elements) {
        for (std::size_t i = 0; i < e->children.size(); ++i) {
          const auto& c = e->children[i];
          if (c.kind == TreeNode::Kind::pi && c.name == kSignatureTarget) existing.push_back({&e->children, i});
        }
      }
      TreeNode pi;
      pi.kind = TreeNode::Kind::pi;
      pi.name = std::string(kSignatureTarget);
      pi.value = random_signature_data(random);
      if (!existing.empty() && random.chance(50)) {
        auto& hit = existing[static_cast<std::size_t>(random.below(existing.size()))];
        if (random.chance(50)) {
          hit.siblings->erase(hit.siblings->begin() + static_cast<std::ptrdiff_t>(hit.index));
        } else {
          (*hit.siblings)[hit.index].value = pi.value;
        }
        return;
      }
      auto& parent = *elements[static_cast<std::size_t>(random.below(elements.size()))];
      auto& ch = parent.children;
      // Either split a text node (the PI must not disturb text merging) or
      // insert between children.
      std::vector<std::size_t> texts;
      for (std::size_t i = 0; i < ch.size(); ++i) {
        if (ch[i].kind == TreeNode::Kind::text && ch[i].value.size() > 1 && ch[i].refs.empty()) {
          texts.push_back(i);
        }
      }
      if (!texts.empty() && random.chance(50)) {
        const std::size_t i = texts[static_cast<std::size_t>(random.below(texts.size()))];
        const auto offsets = code_point_offsets(ch[i].value);
        const std::size_t cut = offsets[static_cast<std::size_t>(random.below(offsets.size()))];
        TreeNode tail;
        tail.kind = TreeNode::Kind::text;
        tail.value = ch[i].value.substr(cut);
        ch[i].value.resize(cut);
        ch.insert(ch.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(pi));
        ch.insert(ch.begin() + static_cast<std::ptrdiff_t>(i) + 2, std::move(tail));
      } else {
        const auto at = static_cast<std::ptrdiff_t>(random.below(ch.size() + 1));
        ch.insert(ch.begin() + at, std::move(pi));
      }
      return;
    }

    case MutationKind::prefix_rename: {
      std::vector<std::pair<TreeNode*, std::string>> candidates;
      for (auto* e : elements) {
        for (const auto& a : e->attributes) {
          if (a.name.starts_with("xmlns:")) candidates.emplace_back(e, a.name.substr(6));
        }
      }
      if (candidates.empty()) throw NotApplicable("document has no prefixed namespace declaration");
      auto& [element, prefix] = candidates[static_cast<std::size_t>(random.below(candidates.size()))];
      std::set<std::string> used;
      for (auto& n : tree.top) collect_prefixes(n, used);
      std::string fresh;
      for (std::uint64_t k = random.below(1000);; ++k) {
        fresh = "r" + std::to_string(k);
        if (!used.contains(fresh)) break;
      }
      rename_prefix(*element, prefix, fresh, true);
      return;
    }

    case MutationKind::text_edit: {
      struct Spot {
        TreeNode* node;
        std::size_t offset;
      };
      std::vector<Spot> spots;
      for (auto* e : elements) {
        for (auto& c : e->children) {
          if (c.kind != TreeNode::Kind::text && c.kind != TreeNode::Kind::cdata) continue;
          for (std::size_t off : code_point_offsets(c.value)) {
            if (unicode::collapsible_length(c.value, off) == 0) spots.push_back({&c, off});
          }
        }
      }
      if (spots.empty()) throw NotApplicable("document has no non-whitespace text");
      auto& spot = spots[static_cast<std::size_t>(random.below(spots.size()))];
      std::size_t end = spot.offset;
      unicode::decode_utf8(spot.node->value, end);
      const char replacement = spot.node->value[spot.offset] == 'x' ? 'y' : 'x';
      spot.node->value.replace(spot.offset, end - spot.offset, 1, replacement);
      spot.node->refs.clear();
      return;
    }

    case MutationKind::attvalue_edit: {
      std::vector<TreeAttribute*> candidates;
      for (auto* e : elements) {
        for (auto& a : e->attributes) {
          if (!is_namespace_declaration(a.name) && !a.name.starts_with("xml:")) candidates.push_back(&a);
        }
      }
      auto& a = choose(random, candidates, "ordinary attribute");
      const auto offsets = code_point_offsets(a.value);
      const std::size_t at = offsets.empty() ? 0 : offsets[static_cast<std::size_t>(random.below(offsets.size()))];
      a.value.insert(at, "Z");
      a.refs.clear();
      return;
    }

    case MutationKind::name_edit: {
      auto& e = *elements[static_cast<std::size_t>(random.below(elements.size()))];
      e.name += "x";
      return;
    }

    case MutationKind::nsuri_edit: {
      std::vector<TreeAttribute*> candidates;
      for (auto* e : elements) {
        for (auto& a : e->attributes) {
          if (!is_namespace_declaration(a.name) || a.value.empty()) continue;
          const std::string prefix = a.name == "xmlns" ? "" : a.name.substr(6);
          bool used = prefix_of(e->name) == prefix;
          if (!prefix.empty()) {
            for (const auto& other : e->attributes) used |= prefix_of(other.name) == prefix;
          }
          if (used) candidates.push_back(&a);
        }
      }
      auto& decl = choose(random, candidates, "namespace declaration in use");
      decl.value += "/changed";
      decl.refs.clear();
      return;
    }
  }
}

}  // namespace detail

// Applies a mutation by rebuilding the document from a parsed tree. The
// rebuilt document is itself equivalent to the input (it is an identity
// transform), so preserving kinds keep the blob and breaking kinds change it.
inline std::string mutate(std::string_view xml, const Mutation& mutation) {
  Tree tree = parse_tree(xml);
  detail::apply(tree, mutation);
  SerializeStyle style;
  if (mutation.kind == MutationKind::quote_swap) {
    bool has_attributes = false;
    std::function<void(const TreeNode&)> scan = [&](const TreeNode& n) {
      has_attributes |= !n.attributes.empty();
      for (const auto& c : n.children) scan(c);
    };
    for (const auto& n : tree.top) scan(n);
    if (!has_attributes) throw NotApplicable("document has no attributes");
    style.swap_quotes = true;
  } else if (mutation.kind == MutationKind::re_encode) {
    Random random(mutation.seed);
    static constexpr std::array kTargets = {OutputEncoding::latin1, OutputEncoding::utf16le,
                                            OutputEncoding::utf16be};
    style.encoding = random.pick(kTargets);
    if (style.encoding == OutputEncoding::latin1) {
      try {
        return serialize_tree(tree, style);
      } catch (const NotApplicable&) {
        style.encoding = OutputEncoding::utf16le;
      }
    }
  }
  return serialize_tree(tree, style);
}

// ---------------------------------------------------------------------------
// Identity-transform benchmark

struct BenchResult {
  std::size_t input_bytes = 0;
  double plain_seconds = 0;     // Expat callbacks straight to a serializer
  double filtered_seconds = 0;  // the same through the signing filter, sha1 digest included
  double digest_seconds = 0;    // sha1 over the already-normalized blob
  double ratio = 0;             // filtered / plain
  int repetitions = 0;
};

namespace detail {

// Identity transform on the raw Expat interface (no namespace processing).
class PlainIdentity {
 public:
  std::string run(std::string_view xml, std::size_t chunk) {
    std::unique_ptr<XML_ParserStruct, esisig::detail::ExpatDeleter> parser(XML_ParserCreate(nullptr));
    XML_Parser p = parser.get();
    out_.clear();
    out_.reserve(xml.size() + xml.size() / 4);
    XML_SetUserData(p, this);
    XML_SetElementHandler(p, &PlainIdentity::on_start, &PlainIdentity::on_end);
    XML_SetCharacterDataHandler(p, &PlainIdentity::on_chars);
    XML_SetProcessingInstructionHandler(p, &PlainIdentity::on_pi);
    for (std::size_t at = 0; at < xml.size(); at += chunk) {
      const auto piece = xml.substr(at, chunk);
      if (XML_Parse(p, piece.data(), static_cast<int>(piece.size()), 0) == XML_STATUS_ERROR) {
        throw Error(XML_ErrorString(XML_GetErrorCode(p)));
      }
    }
    if (XML_Parse(p, nullptr, 0, 1) == XML_STATUS_ERROR) throw Error(XML_ErrorString(XML_GetErrorCode(p)));
    return std::move(out_);
  }

 private:
  static PlainIdentity& self(void* u) { return *static_cast<PlainIdentity*>(u); }

  static void XMLCALL on_start(void* u, const XML_Char* name, const XML_Char** atts) {
    auto& out = self(u).out_;
    out += '<';
    out += name;
    for (; *atts != nullptr; atts += 2) {
      out += ' ';
      out += atts[0];
      out += "=\"";
      append_escaped_attribute(out, atts[1]);
      out += '"';
    }
    out += '>';
  }

  static void XMLCALL on_end(void* u, const XML_Char* name) {
    auto& out = self(u).out_;
    out += "</";
    out += name;
    out += '>';
  }

  static void XMLCALL on_chars(void* u, const XML_Char* s, int len) {
    append_escaped_text(self(u).out_, std::string_view(s, static_cast<std::size_t>(len)));
  }

  static void XMLCALL on_pi(void* u, const XML_Char* target, const XML_Char* data) {
    auto& out = self(u).out_;
    out += "<?";
    out += target;
    out += ' ';
    out += data;
    out += "?>";
  }

  std::string out_;
};

inline std::string filtered_identity(std::string_view xml, std::size_t chunk, std::string* digest_out) {
  std::string out;
  out.reserve(xml.size() + xml.size() / 4);
  SigningParser parser(XmlWriter(&out), nullptr, FilterOptions{{DigestAlgorithm::sha1}});
  for (std::size_t at = 0; at < xml.size(); at += chunk) parser.feed(xml.substr(at, chunk));
  parser.finish();
  if (digest_out != nullptr) *digest_out = parser.digest(DigestAlgorithm::sha1);
  return out;
}

template <class F>
double time_seconds(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

// For each size, averages over `repetitions` freshly generated documents
// (seeds seed, seed+1, ...). Input is fed in 64 KiB chunks.
inline std::vector<BenchResult> bench_identity(const std::vector<std::size_t>& sizes, int repetitions,
                                               std::uint64_t seed = 1) {
  constexpr std::size_t kChunk = 64 * 1024;
  std::vector<BenchResult> results;
  for (const std::size_t size : sizes) {
    BenchResult r;
    r.repetitions = repetitions;
    for (int rep = 0; rep < repetitions; ++rep) {
      CorpusSpec spec;
      spec.target_bytes = size;
      spec.seed = seed + static_cast<std::uint64_t>(rep);
      const std::string xml = generate(spec);
      r.input_bytes += xml.size();
      detail::PlainIdentity plain;
      std::size_t sink = 0;
      r.plain_seconds += detail::time_seconds([&] { sink += plain.run(xml, kChunk).size(); });
      r.filtered_seconds += detail::time_seconds([&] { sink += detail::filtered_identity(xml, kChunk, nullptr).size(); });
      const auto blob = normalize(events_to_records(events_from_xml(xml)));
      r.digest_seconds += detail::time_seconds([&] { sink += digest(blob.bytes, "sha1").size(); });
      if (sink == 0) throw Error("empty benchmark output");
    }
    const double n = std::max(repetitions, 1);
    r.input_bytes = static_cast<std::size_t>(static_cast<double>(r.input_bytes) / n);
    r.plain_seconds /= n;
    r.filtered_seconds /= n;
    r.digest_seconds /= n;
    r.ratio = r.plain_seconds > 0 ? r.filtered_seconds / r.plain_seconds : 0;
    results.push_back(r);
  }
  return results;
}

// Coefficient of determination of the least-squares line through (x, y).
inline double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0;
  return (sxy * sxy) / (sxx * syy);
}

// Plain-text table: size, plain time, filtered time, ratio, digest time.
inline std::string format_bench_table(const std::vector<BenchResult>& results) {
  std::string out = "  size/MB   plain/s  filtered/s   ratio   digest/s\n";
  char line[128];
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%9.2f %9.4f %11.4f %6.0f%% %10.5f\n",
                  static_cast<double>(r.input_bytes) / (1024.0 * 1024.0), r.plain_seconds,
                  r.filtered_seconds, 100.0 * r.ratio, r.digest_seconds);
    out += line;
  }
  return out;
}

}  // namespace esisig::corpus
