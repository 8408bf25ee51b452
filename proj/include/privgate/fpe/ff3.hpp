#pragma once

// FF3-1 format-preserving encryption (NIST SP 800-38G Rev. 1) over an
// arbitrary alphabet of Unicode scalar values.
//
// Numeral strings follow the FF3 convention: NUM_radix(REV(X)), i.e. the
// first numeral of a half is the least significant digit of its value. The
// AES round function runs on byte-reversed key and blocks (REVB).

#include "privgate/error.hpp"
#include "privgate/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace privgate::fpe {

using u128 = unsigned __int128;

inline constexpr int kRounds = 8;
inline constexpr std::uint64_t kMinDomain = 1'000'000;

class Ff3Key {
public:
    Ff3Key(std::vector<std::uint8_t> bytes, std::string key_id)
        : bytes_(std::move(bytes)), key_id_(std::move(key_id)) {
        if (bytes_.size() != 16 && bytes_.size() != 24 && bytes_.size() != 32)
            throw KeyError("FF3-1 key must be 16, 24 or 32 bytes, got " +
                           std::to_string(bytes_.size()));
    }

    static Ff3Key from_hex(std::string_view hex, std::string key_id = "default") {
        std::vector<std::uint8_t> bytes;
        try {
            bytes = text::hex_decode(hex);
        } catch (const std::invalid_argument& e) {
            throw KeyError(std::string("key is not valid hex: ") + e.what());
        }
        return Ff3Key(std::move(bytes), std::move(key_id));
    }

    std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
    const std::string& key_id() const noexcept { return key_id_; }

private:
    std::vector<std::uint8_t> bytes_;
    std::string key_id_;
};

/// Hex key read from an environment variable. Throws KeyError when unset or invalid.
inline Ff3Key key_from_env(const std::string& variable, std::string key_id = "env") {
    const char* value = std::getenv(variable.c_str());
    if (value == nullptr || *value == '\0')
        throw KeyError("environment variable " + variable + " is not set");
    return Ff3Key::from_hex(value, std::move(key_id));
}

/// Hex key read from a file (surrounding whitespace ignored).
inline Ff3Key key_from_file(const std::string& path, std::string key_id = "file") {
    std::ifstream in(path);
    if (!in) throw KeyError("cannot open key file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return Ff3Key::from_hex(text::trim(ss.str()), std::move(key_id));
}

class Tweak {
public:
    using Bytes = std::array<std::uint8_t, 7>;

    Tweak() = default;
    explicit Tweak(const Bytes& bytes) : bytes_(bytes) {}

    static Tweak from_bytes(std::span<const std::uint8_t> bytes) {
        if (bytes.size() != 7)
            throw std::invalid_argument("FF3-1 tweak must be exactly 7 bytes, got " +
                                        std::to_string(bytes.size()));
        Bytes b{};
        std::copy(bytes.begin(), bytes.end(), b.begin());
        return Tweak(b);
    }

    static Tweak from_hex(std::string_view hex) { return from_bytes(text::hex_decode(hex)); }

    const Bytes& bytes() const noexcept { return bytes_; }
    std::string hex() const { return text::hex_encode({bytes_.begin(), bytes_.end()}); }

    /// 64-bit FF3 tweak layout: T_L = T[0..27] || 0^4, T_R = T[32..55] || T[28..31] || 0^4.
    std::array<std::uint8_t, 8> expand() const {
        return {bytes_[0], bytes_[1], bytes_[2], static_cast<std::uint8_t>(bytes_[3] & 0xF0),
                bytes_[4], bytes_[5], bytes_[6], static_cast<std::uint8_t>((bytes_[3] & 0x0F) << 4)};
    }

    friend bool operator==(const Tweak&, const Tweak&) = default;

private:
    Bytes bytes_{};
};

class Alphabet {
public:
    explicit Alphabet(std::string_view utf8_symbols) : symbols_(text::utf8_decode(utf8_symbols)) {
        if (symbols_.size() < 2 || symbols_.size() > 65536)
            throw std::invalid_argument("alphabet radix must be in [2, 65536]");
        for (std::uint32_t i = 0; i < symbols_.size(); ++i) {
            if (!index_.emplace(symbols_[i], i).second)
                throw std::invalid_argument("alphabet symbols must be distinct");
        }
    }

    std::uint32_t radix() const noexcept { return static_cast<std::uint32_t>(symbols_.size()); }
    const std::u32string& symbols() const noexcept { return symbols_; }
    bool contains(char32_t c) const { return index_.contains(c); }

    std::optional<std::uint32_t> index_of(char32_t c) const {
        const auto it = index_.find(c);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    char32_t symbol(std::uint32_t i) const { return symbols_.at(i); }

    friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.symbols_ == b.symbols_; }

private:
    std::u32string symbols_;
    std::unordered_map<char32_t, std::uint32_t> index_;
};

namespace alphabets {
inline const Alphabet& digits() {
    static const Alphabet a("0123456789");
    return a;
}
inline const Alphabet& lower() {
    static const Alphabet a("abcdefghijklmnopqrstuvwxyz");
    return a;
}
inline const Alphabet& letters() {
    static const Alphabet a("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ");
    return a;
}
inline const Alphabet& alnum() {
    static const Alphabet a("0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ");
    return a;
}
}  // namespace alphabets

struct DomainLimits {
    std::size_t min_len;
    std::size_t max_len;
};

/// FF3-1 length bounds: radix^min_len >= 10^6 (and min_len >= 2);
/// max_len = 2 * floor(log_radix(2^96)).
inline DomainLimits domain_limits(std::uint32_t radix) {
    std::size_t min_len = 0;
    for (u128 p = 1; p < kMinDomain; p *= radix) ++min_len;
    min_len = std::max<std::size_t>(min_len, 2);

    const u128 limit = u128{1} << 96;
    std::size_t half = 0;
    for (u128 p = radix; p <= limit; p *= radix) ++half;
    return {min_len, 2 * half};
}

using Numerals = std::vector<std::uint32_t>;

namespace detail {

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};

// AES-ECB on the byte-reversed key; one context per FF3 call so the cipher
// functions stay reentrant.
class RoundCipher {
public:
    explicit RoundCipher(std::span<const std::uint8_t> key) : ctx_(EVP_CIPHER_CTX_new()) {
        if (!ctx_) throw Error("EVP_CIPHER_CTX_new failed");
        std::vector<std::uint8_t> rev(key.rbegin(), key.rend());
        const EVP_CIPHER* cipher = key.size() == 16   ? EVP_aes_128_ecb()
                                   : key.size() == 24 ? EVP_aes_192_ecb()
                                                      : EVP_aes_256_ecb();
        if (EVP_EncryptInit_ex(ctx_.get(), cipher, nullptr, rev.data(), nullptr) != 1)
            throw Error("AES key setup failed");
        EVP_CIPHER_CTX_set_padding(ctx_.get(), 0);
    }

    std::array<std::uint8_t, 16> encrypt_block(const std::array<std::uint8_t, 16>& in) {
        std::array<std::uint8_t, 16> out{};
        int len = 0;
        if (EVP_EncryptUpdate(ctx_.get(), out.data(), &len, in.data(), 16) != 1 || len != 16)
            throw Error("AES block encryption failed");
        return out;
    }

private:
    std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter> ctx_;
};

inline u128 pow_u128(std::uint32_t radix, std::size_t e) {
    u128 p = 1;
    for (std::size_t i = 0; i < e; ++i) p *= radix;
    return p;
}

// NUM_radix(REV(X)): X[0] is least significant.
inline u128 num_rev(std::span<const std::uint32_t> x, std::uint32_t radix) {
    u128 v = 0;
    for (auto it = x.rbegin(); it != x.rend(); ++it) v = v * radix + *it;
    return v;
}

// REV(STR^m_radix(v)).
inline Numerals str_rev(u128 v, std::uint32_t radix, std::size_t m) {
    Numerals out(m);
    for (std::size_t i = 0; i < m; ++i) {
        out[i] = static_cast<std::uint32_t>(v % radix);
        v /= radix;
    }
    return out;
}

// y = NUM(REVB(CIPH(REVB(W xor [i]_4 || [NUM_radix(REV(half))]^12)))).
inline u128 round_value(RoundCipher& aes, const std::uint8_t* w, int round,
                        std::span<const std::uint32_t> half, std::uint32_t radix) {
    std::array<std::uint8_t, 16> p{};
    p[0] = w[0];
    p[1] = w[1];
    p[2] = w[2];
    p[3] = static_cast<std::uint8_t>(w[3] ^ round);
    u128 b = num_rev(half, radix);
    for (int k = 15; k >= 4; --k) {
        p[k] = static_cast<std::uint8_t>(b & 0xFF);
        b >>= 8;
    }
    std::reverse(p.begin(), p.end());
    auto s = aes.encrypt_block(p);
    std::reverse(s.begin(), s.end());
    u128 y = 0;
    for (auto byte : s) y = (y << 8) | byte;
    return y;
}

inline void check_length(std::size_t n, std::uint32_t radix) {
    const auto limits = domain_limits(radix);
    if (n < limits.min_len)
        throw DomainTooSmall("numeral string of length " + std::to_string(n) + " in radix " +
                             std::to_string(radix) + " is below the FF3-1 minimum length " +
                             std::to_string(limits.min_len));
    if (n > limits.max_len)
        throw LengthOutOfRange("numeral string of length " + std::to_string(n) +
                               " exceeds the FF3-1 maximum length " +
                               std::to_string(limits.max_len) + " for radix " +
                               std::to_string(radix));
}

inline void check_numerals(std::span<const std::uint32_t> x, std::uint32_t radix) {
    if (radix < 2 || radix > 65536) throw std::invalid_argument("radix must be in [2, 65536]");
    for (auto d : x)
        if (d >= radix) throw AlphabetViolation("numeral out of range for radix");
}

}  // namespace detail

inline Numerals ff3_encrypt(const Ff3Key& key, const Tweak& tweak, std::uint32_t radix,
                            std::span<const std::uint32_t> plaintext) {
    detail::check_numerals(plaintext, radix);
    const std::size_t n = plaintext.size();
    detail::check_length(n, radix);

    const std::size_t u = (n + 1) / 2;
    const std::size_t v = n - u;
    Numerals a(plaintext.begin(), plaintext.begin() + static_cast<std::ptrdiff_t>(u));
    Numerals b(plaintext.begin() + static_cast<std::ptrdiff_t>(u), plaintext.end());
    const auto t = tweak.expand();
    const u128 mod_u = detail::pow_u128(radix, u);
    const u128 mod_v = detail::pow_u128(radix, v);

    detail::RoundCipher aes(key.bytes());
    for (int i = 0; i < kRounds; ++i) {
        const bool even = i % 2 == 0;
        const std::size_t m = even ? u : v;
        const u128 mod = even ? mod_u : mod_v;
        const std::uint8_t* w = even ? &t[4] : &t[0];
        const u128 y = detail::round_value(aes, w, i, b, radix) % mod;
        const u128 c = (detail::num_rev(a, radix) + y) % mod;
        a = std::move(b);
        b = detail::str_rev(c, radix, m);
    }
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

inline Numerals ff3_decrypt(const Ff3Key& key, const Tweak& tweak, std::uint32_t radix,
                            std::span<const std::uint32_t> ciphertext) {
    detail::check_numerals(ciphertext, radix);
    const std::size_t n = ciphertext.size();
    detail::check_length(n, radix);

    const std::size_t u = (n + 1) / 2;
    const std::size_t v = n - u;
    Numerals a(ciphertext.begin(), ciphertext.begin() + static_cast<std::ptrdiff_t>(u));
    Numerals b(ciphertext.begin() + static_cast<std::ptrdiff_t>(u), ciphertext.end());
    const auto t = tweak.expand();
    const u128 mod_u = detail::pow_u128(radix, u);
    const u128 mod_v = detail::pow_u128(radix, v);

    detail::RoundCipher aes(key.bytes());
    for (int i = kRounds - 1; i >= 0; --i) {
        const bool even = i % 2 == 0;
        const std::size_t m = even ? u : v;
        const u128 mod = even ? mod_u : mod_v;
        const std::uint8_t* w = even ? &t[4] : &t[0];
        const u128 y = detail::round_value(aes, w, i, a, radix) % mod;
        const u128 c = (detail::num_rev(b, radix) + mod - y) % mod;
        b = std::move(a);
        a = detail::str_rev(c, radix, m);
    }
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

/// Maps a UTF-8 string onto alphabet indices; AlphabetViolation on foreign symbols.
inline Numerals to_numerals(const Alphabet& alphabet, std::string_view s) {
    Numerals out;
    for (char32_t c : text::utf8_decode(s)) {
        const auto idx = alphabet.index_of(c);
        if (!idx) throw AlphabetViolation("symbol outside the alphabet");
        out.push_back(*idx);
    }
    return out;
}

inline std::string from_numerals(const Alphabet& alphabet, std::span<const std::uint32_t> x) {
    std::u32string s;
    s.reserve(x.size());
    for (auto d : x) s.push_back(alphabet.symbol(d));
    return text::utf8_encode(s);
}

inline std::string ff3_encrypt(const Ff3Key& key, const Tweak& tweak, const Alphabet& alphabet,
                               std::string_view plaintext) {
    return from_numerals(alphabet,
                         ff3_encrypt(key, tweak, alphabet.radix(), to_numerals(alphabet, plaintext)));
}

inline std::string ff3_decrypt(const Ff3Key& key, const Tweak& tweak, const Alphabet& alphabet,
                               std::string_view ciphertext) {
    return from_numerals(alphabet,
                         ff3_decrypt(key, tweak, alphabet.radix(), to_numerals(alphabet, ciphertext)));
}

}  // namespace privgate::fpe
