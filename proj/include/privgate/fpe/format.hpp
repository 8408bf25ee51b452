#pragma once

// Format-preserving wrapper around FF3-1: an entity is split into one payload
// per character class (all characters of a class across the whole entity,
// in source order) plus passthrough characters that keep their positions.
// Each payload is encrypted as a single FF3-1 block and written back into
// the positions it came from.

#include "privgate/error.hpp"
#include "privgate/fpe/ff3.hpp"
#include "privgate/text.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace privgate::fpe {

struct CharClass {
    std::string name;
    Alphabet alphabet;
};

class FormatProfile {
public:
    FormatProfile(std::string profile_id, std::vector<CharClass> classes)
        : id_(std::move(profile_id)), classes_(std::move(classes)) {
        if (classes_.empty()) throw std::invalid_argument("format profile needs at least one class");
        for (std::size_t i = 0; i < classes_.size(); ++i)
            for (std::size_t j = i + 1; j < classes_.size(); ++j)
                for (char32_t c : classes_[i].alphabet.symbols())
                    if (classes_[j].alphabet.contains(c))
                        throw std::invalid_argument("format profile '" + id_ +
                                                    "': character classes overlap");
    }

    const std::string& id() const noexcept { return id_; }
    const std::vector<CharClass>& classes() const noexcept { return classes_; }

    /// Index of the class containing c, or nullopt for passthrough characters.
    std::optional<std::size_t> class_of(char32_t c) const {
        for (std::size_t i = 0; i < classes_.size(); ++i)
            if (classes_[i].alphabet.contains(c)) return i;
        return std::nullopt;
    }

private:
    std::string id_;
    std::vector<CharClass> classes_;
};

namespace profiles {
inline const FormatProfile& digits() {
    static const FormatProfile p("digits", {{"digits", alphabets::digits()}});
    return p;
}
inline const FormatProfile& alnum() {
    static const FormatProfile p("alnum", {{"alnum", alphabets::alnum()}});
    return p;
}
inline const FormatProfile& email() {
    static const FormatProfile p("email",
                                 {{"letters", alphabets::letters()}, {"digits", alphabets::digits()}});
    return p;
}
}  // namespace profiles

struct Passthrough {
    std::size_t position;
    char32_t symbol;
    friend bool operator==(const Passthrough&, const Passthrough&) = default;
};

// Positions are code-point indices into the source entity.
struct FormatSkeleton {
    std::size_t source_length = 0;
    std::vector<std::string> payloads;                  // one per profile class, UTF-8
    std::vector<std::vector<std::size_t>> positions;    // payload index -> source position
    std::vector<Passthrough> passthrough;
};

inline FormatSkeleton extract_skeleton(std::string_view entity, const FormatProfile& profile) {
    const auto cps = text::utf8_decode(entity);
    const auto n_classes = profile.classes().size();
    FormatSkeleton sk;
    sk.source_length = cps.size();
    std::vector<std::u32string> payloads(n_classes);
    sk.positions.resize(n_classes);
    for (std::size_t pos = 0; pos < cps.size(); ++pos) {
        if (const auto cls = profile.class_of(cps[pos])) {
            payloads[*cls].push_back(cps[pos]);
            sk.positions[*cls].push_back(pos);
        } else {
            sk.passthrough.push_back({pos, cps[pos]});
        }
    }
    for (const auto& p : payloads) sk.payloads.push_back(text::utf8_encode(p));
    return sk;
}

inline std::string reassemble(const FormatSkeleton& sk) {
    std::u32string out(sk.source_length, U'\0');
    for (const auto& p : sk.passthrough) out.at(p.position) = p.symbol;
    for (std::size_t c = 0; c < sk.payloads.size(); ++c) {
        const auto payload = text::utf8_decode(sk.payloads[c]);
        if (payload.size() != sk.positions[c].size())
            throw std::logic_error("skeleton payload length does not match its position map");
        for (std::size_t i = 0; i < payload.size(); ++i) out.at(sk.positions[c][i]) = payload[i];
    }
    return text::utf8_encode(out);
}

namespace detail {

template <typename Cipher>
std::string transform_preserving(std::string_view entity, const FormatProfile& profile,
                                 Cipher&& cipher) {
    auto sk = extract_skeleton(entity, profile);
    bool any = false;
    for (std::size_t c = 0; c < sk.payloads.size(); ++c) {
        if (sk.payloads[c].empty()) continue;
        const auto& alphabet = profile.classes()[c].alphabet;
        const auto len = sk.positions[c].size();
        const auto limits = domain_limits(alphabet.radix());
        if (len < limits.min_len)
            throw FormatTooShort("'" + profile.classes()[c].name + "' payload of length " +
                                 std::to_string(len) + " is below the FF3-1 minimum of " +
                                 std::to_string(limits.min_len));
        if (len > limits.max_len)
            throw LengthOutOfRange("'" + profile.classes()[c].name + "' payload of length " +
                                   std::to_string(len) + " exceeds the FF3-1 maximum of " +
                                   std::to_string(limits.max_len));
        sk.payloads[c] = cipher(alphabet, sk.payloads[c]);
        any = true;
    }
    if (!any) throw FormatTooShort("entity has no encryptable characters");
    return reassemble(sk);
}

}  // namespace detail

inline std::string encrypt_preserving(std::string_view entity, const FormatProfile& profile,
                                      const Ff3Key& key, const Tweak& tweak) {
    return detail::transform_preserving(entity, profile, [&](const Alphabet& a, const std::string& s) {
        return ff3_encrypt(key, tweak, a, s);
    });
}

inline std::string decrypt_preserving(std::string_view ciphertext, const FormatProfile& profile,
                                      const Ff3Key& key, const Tweak& tweak) {
    return detail::transform_preserving(ciphertext, profile,
                                        [&](const Alphabet& a, const std::string& s) {
                                            return ff3_decrypt(key, tweak, a, s);
                                        });
}

/// Profiles addressable by id; starts with the built-in digits/alnum/email profiles.
class ProfileRegistry {
public:
    ProfileRegistry() {
        add(profiles::digits());
        add(profiles::alnum());
        add(profiles::email());
    }

    void add(FormatProfile profile) {
        const auto id = profile.id();
        profiles_.insert_or_assign(id, std::move(profile));
    }

    bool contains(const std::string& id) const { return profiles_.contains(id); }

    const FormatProfile& get(const std::string& id) const {
        const auto it = profiles_.find(id);
        if (it == profiles_.end()) throw std::out_of_range("unknown format profile '" + id + "'");
        return it->second;
    }

private:
    std::map<std::string, FormatProfile> profiles_;
};

}  // namespace privgate::fpe
