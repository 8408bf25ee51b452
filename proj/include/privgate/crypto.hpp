#pragma once

// Thin OpenSSL wrappers: SHA-256, HMAC-SHA256, AES-256-GCM and CSPRNG bytes.

#include "privgate/error.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/rand.h>

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace privgate::crypto {

using Bytes = std::vector<std::uint8_t>;

inline std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 failed");
    return out;
}

inline std::array<std::uint8_t, 32> sha256(std::string_view data) {
    return sha256({reinterpret_cast<const std::uint8_t*>(data.data()), data.size()});
}

inline std::array<std::uint8_t, 32> hmac_sha256(std::span<const std::uint8_t> key, std::string_view msg) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
              reinterpret_cast<const unsigned char*>(msg.data()), msg.size(), out.data(), &len))
        throw Error("HMAC-SHA256 failed");
    return out;
}

inline Bytes random_bytes(std::size_t n) {
    Bytes out(n);
    if (RAND_bytes(out.data(), static_cast<int>(n)) != 1) throw Error("RAND_bytes failed");
    return out;
}

namespace detail {
struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;
}  // namespace detail

inline constexpr std::size_t kGcmNonce = 12;
inline constexpr std::size_t kGcmTag = 16;

/// AES-256-GCM; output layout nonce || ciphertext || tag.
inline Bytes seal(std::span<const std::uint8_t, 32> key, std::string_view plaintext) {
    const auto nonce = random_bytes(kGcmNonce);
    detail::CtxPtr ctx(EVP_CIPHER_CTX_new());
    Bytes out(nonce);
    out.resize(kGcmNonce + plaintext.size() + kGcmTag);
    int len = 0;
    if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.data()) != 1 ||
        EVP_EncryptUpdate(ctx.get(), out.data() + kGcmNonce, &len,
                          reinterpret_cast<const unsigned char*>(plaintext.data()),
                          static_cast<int>(plaintext.size())) != 1)
        throw Error("AES-GCM encryption failed");
    int tail = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + kGcmNonce + len, &tail) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kGcmTag),
                            out.data() + kGcmNonce + plaintext.size()) != 1)
        throw Error("AES-GCM finalisation failed");
    return out;
}

inline std::string open(std::span<const std::uint8_t, 32> key, std::span<const std::uint8_t> sealed) {
    if (sealed.size() < kGcmNonce + kGcmTag) throw Error("sealed value too short");
    const std::size_t n = sealed.size() - kGcmNonce - kGcmTag;
    std::string out(n, '\0');
    detail::CtxPtr ctx(EVP_CIPHER_CTX_new());
    int len = 0;
    if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), sealed.data()) != 1 ||
        EVP_DecryptUpdate(ctx.get(), reinterpret_cast<unsigned char*>(out.data()), &len,
                          sealed.data() + kGcmNonce, static_cast<int>(n)) != 1)
        throw Error("AES-GCM decryption failed");
    Bytes tag(sealed.end() - static_cast<std::ptrdiff_t>(kGcmTag), sealed.end());
    int tail = 0;
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kGcmTag), tag.data()) != 1 ||
        EVP_DecryptFinal_ex(ctx.get(), reinterpret_cast<unsigned char*>(out.data()) + len, &tail) != 1)
        throw Error("AES-GCM authentication failed");
    return out;
}

}  // namespace privgate::crypto
