#pragma once

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/params.h>

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pds/errors.hpp"

namespace pds::crypto {

using Digest = std::array<uint8_t, 32>;

inline Digest sha256(std::string_view data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != out.size())
    throw Error(Errc::io_error, "sha256 failed");
  return out;
}

inline Digest hmac_sha256(const std::vector<uint8_t>& key, std::string_view msg) {
  struct MacFree {
    void operator()(EVP_MAC* m) const { EVP_MAC_free(m); }
  };
  struct CtxFree {
    void operator()(EVP_MAC_CTX* c) const { EVP_MAC_CTX_free(c); }
  };
  std::unique_ptr<EVP_MAC, MacFree> mac(EVP_MAC_fetch(nullptr, "HMAC", nullptr));
  if (!mac) throw Error(Errc::io_error, "HMAC unavailable");
  std::unique_ptr<EVP_MAC_CTX, CtxFree> ctx(EVP_MAC_CTX_new(mac.get()));
  if (!ctx) throw Error(Errc::io_error, "HMAC context allocation failed");

  char digest_name[] = "SHA256";
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest_name, 0),
      OSSL_PARAM_construct_end()};
  // EVP_MAC_init rejects empty keys with a null pointer; pass a dummy byte
  // address with length 0 so an empty salt still keys the MAC.
  static const uint8_t empty = 0;
  const uint8_t* key_ptr = key.empty() ? &empty : key.data();
  Digest out{};
  std::size_t len = 0;
  if (EVP_MAC_init(ctx.get(), key_ptr, key.size(), params) != 1 ||
      EVP_MAC_update(ctx.get(), reinterpret_cast<const uint8_t*>(msg.data()),
                     msg.size()) != 1 ||
      EVP_MAC_final(ctx.get(), out.data(), &len, out.size()) != 1 ||
      len != out.size())
    throw Error(Errc::io_error, "hmac-sha256 failed");
  return out;
}

inline std::string to_hex(const uint8_t* data, std::size_t n) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 0xf];
  }
  return out;
}

inline std::string to_hex(const Digest& d) { return to_hex(d.data(), d.size()); }

inline std::string sha256_hex(std::string_view data) { return to_hex(sha256(data)); }

inline int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline std::vector<uint8_t> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0)
    throw Error(Errc::parse_error, "odd-length hex string");
  std::vector<uint8_t> out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_nibble(hex[i]);
    int lo = hex_nibble(hex[i + 1]);
    if (hi < 0 || lo < 0)
      throw Error(Errc::parse_error, "invalid hex string");
    out.push_back(static_cast<uint8_t>(hi << 4 | lo));
  }
  return out;
}

inline bool is_hex_digest(std::string_view s) {
  if (s.size() != 64) return false;
  for (char c : s)
    if (hex_nibble(c) < 0 || (c >= 'A' && c <= 'F')) return false;
  return true;
}

}  // namespace pds::crypto
