#pragma once

// The <?signature ...?> processing instruction: a sequence of key='value'
// pairs. Recognized keys are algorithm, content and target; "armor" is an
// alias for content that implies algorithm pgp. Other keys are kept but
// have no effect.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esisig/error.hpp"

namespace esisig {

inline constexpr std::string_view kSignatureTarget = "signature";
inline constexpr std::string_view kWholeDocumentLiteral = "/";
inline constexpr std::string_view kFollowingElementLiteral = "following::*[1]";

enum class SignatureTarget { whole_document, following_element };

inline std::string_view target_literal(SignatureTarget target) {
  return target == SignatureTarget::whole_document ? kWholeDocumentLiteral : kFollowingElementLiteral;
}

struct SignaturePI {
  std::string algorithm;
  std::string content;
  SignatureTarget target = SignatureTarget::whole_document;
  std::vector<std::pair<std::string, std::string>> other_keys;

  bool operator==(const SignaturePI&) const = default;
};

namespace detail {

inline bool is_pi_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

inline bool is_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
         c == '_' || c == '.' || c == ':';
}

}  // namespace detail

inline SignaturePI parse_signature_pi(std::string_view data) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t i = 0;
  const auto skip_space = [&] {
    while (i < data.size() && detail::is_pi_space(data[i])) ++i;
  };
  for (;;) {
    skip_space();
    if (i == data.size()) break;
    const std::size_t key_begin = i;
    while (i < data.size() && detail::is_key_char(data[i])) ++i;
    if (i == key_begin) throw MalformedPIError("expected a key in signature PI");
    std::string key(data.substr(key_begin, i - key_begin));
    skip_space();
    if (i == data.size() || data[i] != '=') throw MalformedPIError("expected '=' after key " + key);
    ++i;
    skip_space();
    if (i == data.size() || (data[i] != '\'' && data[i] != '"')) {
      throw MalformedPIError("value of " + key + " is not quoted");
    }
    const char quote = data[i++];
    const std::size_t close = data.find(quote, i);
    if (close == std::string_view::npos) throw MalformedPIError("unterminated value for " + key);
    for (const auto& [existing, _] : pairs) {
      if (existing == key) throw MalformedPIError("duplicate key " + key);
    }
    pairs.emplace_back(std::move(key), std::string(data.substr(i, close - i)));
    i = close + 1;
  }

  SignaturePI pi;
  bool has_algorithm = false;
  bool has_content = false;
  bool has_armor = false;
  for (auto& [key, value] : pairs) {
    if (key == "algorithm") {
      pi.algorithm = std::move(value);
      has_algorithm = true;
    } else if (key == "content" || key == "armor") {
      if (has_content) throw MalformedPIError("both content and armor given");
      pi.content = std::move(value);
      has_content = true;
      has_armor = key == "armor";
    } else if (key == "target") {
      if (value == kWholeDocumentLiteral) {
        pi.target = SignatureTarget::whole_document;
      } else if (value == kFollowingElementLiteral) {
        pi.target = SignatureTarget::following_element;
      } else {
        throw MalformedPIError("unsupported target '" + value + "'");
      }
    } else {
      pi.other_keys.emplace_back(key, std::move(value));
    }
  }
  if (!has_content) throw MalformedPIError("signature PI has no content");
  if (!has_algorithm) {
    if (!has_armor) throw MalformedPIError("signature PI has no algorithm");
    pi.algorithm = "pgp";
  }
  return pi;
}

// Quotes with ' unless the value contains one, then with ".
inline std::string quote_pi_value(std::string_view value) {
  const bool single = value.find('\'') != std::string_view::npos;
  const bool dbl = value.find('"') != std::string_view::npos;
  if (single && dbl) throw SigningError("value contains both quote characters");
  const char q = single ? '"' : '\'';
  std::string out(1, q);
  out += value;
  out += q;
  return out;
}

// PI data (what follows the target) for a signature.
inline std::string signature_pi_data(const SignaturePI& pi) {
  std::string data = "algorithm=" + quote_pi_value(pi.algorithm);
  data += " content=" + quote_pi_value(pi.content);
  if (pi.target == SignatureTarget::following_element) {
    data += " target=" + quote_pi_value(kFollowingElementLiteral);
  }
  for (const auto& [key, value] : pi.other_keys) data += " " + key + "=" + quote_pi_value(value);
  return data;
}

inline std::string format_signature_pi(const SignaturePI& pi) {
  return "<?signature " + signature_pi_data(pi) + "?>";
}

}  // namespace esisig
