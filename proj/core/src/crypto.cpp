#include "prunesearch/crypto.hpp"

#include <cstring>
#include <fstream>

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

namespace prunesearch::crypto {

namespace {

constexpr size_t kNonceLen = 12;
constexpr size_t kTagLen = 16;

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0)
        throw CryptoError("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (size_t i = 0; i < out.size(); i++) {
        int hi = hex_digit(hex[2 * i]);
        int lo = hex_digit(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw CryptoError("invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Key256 hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> msg) {
    Key256 out{};
    unsigned int len = 0;
    if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(),
             out.data(), &len) == nullptr ||
        len != out.size())
        throw CryptoError("HMAC-SHA256 failed");
    return out;
}

SecretKey SecretKey::from_bytes(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != 32)
        throw CryptoError("key must be exactly 32 bytes");
    SecretKey k;
    std::memcpy(k.master_.data(), bytes.data(), 32);
    return k;
}

SecretKey SecretKey::from_hex(std::string_view hex) {
    auto bytes = crypto::from_hex(hex);
    return from_bytes(bytes);
}

SecretKey SecretKey::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CryptoError("cannot read key file: " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    // trim trailing whitespace so "64 hex chars + newline" files load
    while (!data.empty() && (data.back() == '\n' || data.back() == '\r' || data.back() == ' '))
        data.pop_back();
    if (data.size() == 32)
        return from_bytes({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
    if (data.size() == 64)
        return from_hex(data);
    throw CryptoError("key file must hold 32 raw bytes or 64 hex chars: " + path.string());
}

namespace {
Key256 derive(const Key256& master, std::string_view label) {
    return hmac_sha256(master, {reinterpret_cast<const std::uint8_t*>(label.data()), label.size()});
}
} // namespace

Key256 SecretKey::token_key() const { return derive(master_, "prunesearch.token.v1"); }
Key256 SecretKey::cipher_key() const { return derive(master_, "prunesearch.doc.v1"); }

namespace {

class AesGcmProvider final : public CipherProvider {
  public:
    explicit AesGcmProvider(Key256 key) : key_(key) {}

    Bytes encrypt(std::span<const std::uint8_t> plaintext) override {
        Bytes out(kNonceLen + plaintext.size() + kTagLen);
        if (RAND_bytes(out.data(), kNonceLen) != 1)
            throw CryptoError("RAND_bytes failed");

        EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
        if (!ctx) throw CryptoError("EVP_CIPHER_CTX_new failed");
        int len = 0;
        bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key_.data(), out.data()) == 1 &&
                  EVP_EncryptUpdate(ctx, out.data() + kNonceLen, &len, plaintext.data(),
                                    static_cast<int>(plaintext.size())) == 1;
        int total = len;
        ok = ok && EVP_EncryptFinal_ex(ctx, out.data() + kNonceLen + total, &len) == 1;
        total += len;
        ok = ok && EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, kTagLen,
                                       out.data() + kNonceLen + total) == 1;
        EVP_CIPHER_CTX_free(ctx);
        if (!ok || static_cast<size_t>(total) != plaintext.size())
            throw CryptoError("AES-GCM encryption failed");
        return out;
    }

    Bytes decrypt(std::span<const std::uint8_t> ciphertext) const override {
        if (ciphertext.size() < kNonceLen + kTagLen)
            throw CryptoError("ciphertext too short");
        size_t body_len = ciphertext.size() - kNonceLen - kTagLen;
        Bytes out(body_len);

        EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
        if (!ctx) throw CryptoError("EVP_CIPHER_CTX_new failed");
        int len = 0;
        std::uint8_t tag[kTagLen];
        std::memcpy(tag, ciphertext.data() + kNonceLen + body_len, kTagLen);
        bool ok = EVP_DecryptInit_ex(ctx, EVP_aes_256_gcm(), nullptr, key_.data(),
                                     ciphertext.data()) == 1 &&
                  EVP_DecryptUpdate(ctx, out.data(), &len, ciphertext.data() + kNonceLen,
                                    static_cast<int>(body_len)) == 1 &&
                  EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, kTagLen, tag) == 1;
        int total = len;
        ok = ok && EVP_DecryptFinal_ex(ctx, out.data() + total, &len) == 1;
        EVP_CIPHER_CTX_free(ctx);
        if (!ok)
            throw CryptoError("AES-GCM authentication failed");
        return out;
    }

    std::string name() const override { return "aes-256-gcm"; }

  private:
    Key256 key_;
};

} // namespace

std::unique_ptr<CipherProvider> make_aes_gcm_provider(const SecretKey& key) {
    return std::make_unique<AesGcmProvider>(key.cipher_key());
}

} // namespace prunesearch::crypto
