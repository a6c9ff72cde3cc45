#include "jslight/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <vector>

#include "jslight/error.hpp"

namespace jslight {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0xf]);
    }
    return out;
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text) {
    std::string compact;
    compact.reserve(text.size());
    for (char c : text) {
        if (c != '\n' && c != '\r' && c != ' ' && c != '\t') compact.push_back(c);
    }
    if (compact.size() % 4 != 0) throw Error("base64 input length is not a multiple of 4");
    if (compact.empty()) return {};

    std::vector<unsigned char> out(compact.size() / 4 * 3);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(compact.data()),
                                  static_cast<int>(compact.size()));
    if (n < 0) throw Error("malformed base64 input");
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t size = static_cast<std::size_t>(n);
    if (compact.ends_with("==")) {
        size -= 2;
    } else if (compact.ends_with("=")) {
        size -= 1;
    }
    return {reinterpret_cast<const char*>(out.data()), size};
}

}  // namespace jslight
