#ifndef MACHWATCH_SERVICE_DIGEST_HPP
#define MACHWATCH_SERVICE_DIGEST_HPP

#include "machwatch/error.hpp"

#include <openssl/evp.h>

#include <memory>
#include <string>
#include <string_view>

namespace machwatch {

/// Lower-case hex SHA-256 of `data`.
inline std::string sha256_hex(std::string_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
        throw Error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

}  // namespace machwatch

#endif  // MACHWATCH_SERVICE_DIGEST_HPP
