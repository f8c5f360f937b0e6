#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prunesearch/errors.hpp"

namespace prunesearch::crypto {

using Bytes = std::vector<std::uint8_t>;
using Key256 = std::array<std::uint8_t, 32>;

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex); // throws CryptoError on odd length / bad digit

Key256 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> msg);

// 32-byte corpus master secret. Domain-separated subkeys are derived for the
// term PRF and the document cipher so the two surfaces never share key
// material directly.
class SecretKey {
  public:
    static SecretKey from_bytes(std::span<const std::uint8_t> bytes); // exactly 32
    static SecretKey from_hex(std::string_view hex);                  // 64 hex chars
    static SecretKey from_file(const std::filesystem::path& path);    // raw 32 or 64 hex

    Key256 token_key() const;
    Key256 cipher_key() const;
    const Key256& master() const { return master_; }

  private:
    Key256 master_{};
};

// Authenticated symmetric cipher. encrypt() is non-deterministic (fresh
// nonce per call); decrypt() throws CryptoError if authentication fails.
class CipherProvider {
  public:
    virtual ~CipherProvider() = default;
    virtual Bytes encrypt(std::span<const std::uint8_t> plaintext) = 0;
    virtual Bytes decrypt(std::span<const std::uint8_t> ciphertext) const = 0;
    virtual std::string name() const = 0;
};

// AES-256-GCM; layout: 12-byte nonce || body || 16-byte tag.
std::unique_ptr<CipherProvider> make_aes_gcm_provider(const SecretKey& key);

} // namespace prunesearch::crypto
