#pragma once

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "esisig/error.hpp"

namespace esisig {

enum class DigestAlgorithm { md5, sha1, sha256 };

inline constexpr std::array kDigestAlgorithms = {DigestAlgorithm::md5, DigestAlgorithm::sha1,
                                                 DigestAlgorithm::sha256};

inline std::string_view algorithm_token(DigestAlgorithm algorithm) {
  switch (algorithm) {
    case DigestAlgorithm::md5:
      return "md5";
    case DigestAlgorithm::sha1:
      return "sha1";
    case DigestAlgorithm::sha256:
      return "sha256";
  }
  return "";
}

inline std::optional<DigestAlgorithm> digest_algorithm_from_token(std::string_view token) {
  for (auto algorithm : kDigestAlgorithms) {
    if (algorithm_token(algorithm) == token) return algorithm;
  }
  return std::nullopt;
}

inline std::string to_hex(const unsigned char* data, std::size_t len) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (std::size_t i = 0; i < len; ++i) {
    out[2 * i] = kHex[data[i] >> 4];
    out[2 * i + 1] = kHex[data[i] & 0x0F];
  }
  return out;
}

// Incremental message digest.
class Digest {
 public:
  explicit Digest(DigestAlgorithm algorithm) : algorithm_(algorithm), ctx_(EVP_MD_CTX_new()) {
    if (!ctx_) throw std::bad_alloc();
    const EVP_MD* md = nullptr;
    switch (algorithm) {
      case DigestAlgorithm::md5:
        md = EVP_md5();
        break;
      case DigestAlgorithm::sha1:
        md = EVP_sha1();
        break;
      case DigestAlgorithm::sha256:
        md = EVP_sha256();
        break;
    }
    if (md == nullptr || EVP_DigestInit_ex(ctx_.get(), md, nullptr) != 1) {
      throw UnsupportedAlgorithm(std::string(algorithm_token(algorithm)));
    }
  }

  void update(std::string_view bytes) {
    if (finished_) throw Error("digest already finalized");
    EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size());
  }

  void operator()(std::string_view bytes) { update(bytes); }

  // Finalizes on first call; later calls return the same value.
  const std::string& hex() {
    if (!finished_) {
      unsigned char md[EVP_MAX_MD_SIZE];
      unsigned int len = 0;
      EVP_DigestFinal_ex(ctx_.get(), md, &len);
      hex_ = to_hex(md, len);
      finished_ = true;
    }
    return hex_;
  }

  DigestAlgorithm algorithm() const noexcept { return algorithm_; }

 private:
  struct CtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const noexcept { EVP_MD_CTX_free(ctx); }
  };

  DigestAlgorithm algorithm_;
  std::unique_ptr<EVP_MD_CTX, CtxDeleter> ctx_;
  bool finished_ = false;
  std::string hex_;
};

// Runs several digests over the same byte stream.
class DigestSet {
 public:
  explicit DigestSet(const std::vector<DigestAlgorithm>& algorithms) {
    for (auto algorithm : algorithms) digests_.emplace_back(algorithm);
  }

  void update(std::string_view bytes) {
    for (auto& d : digests_) d.update(bytes);
  }

  void operator()(std::string_view bytes) { update(bytes); }

  // nullopt when the algorithm is not part of the set.
  std::optional<std::string> hex(DigestAlgorithm algorithm) {
    for (auto& d : digests_) {
      if (d.algorithm() == algorithm) return d.hex();
    }
    return std::nullopt;
  }

 private:
  std::vector<Digest> digests_;
};

// Lowercase hex digest of `bytes`; throws UnsupportedAlgorithm for tokens
// other than md5, sha1 and sha256.
inline std::string digest(std::string_view bytes, std::string_view algorithm) {
  const auto parsed = digest_algorithm_from_token(algorithm);
  if (!parsed) throw UnsupportedAlgorithm("unsupported digest algorithm: " + std::string(algorithm));
  Digest d(*parsed);
  d.update(bytes);
  return d.hex();
}

}  // namespace esisig
