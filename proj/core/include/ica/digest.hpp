// SPDX-License-Identifier: Apache-2.0

#ifndef ICA_DIGEST_HPP_
#define ICA_DIGEST_HPP_

#include <string>
#include <string_view>

namespace ica {

inline constexpr std::size_t kDigestHexLength = 64;

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

bool is_hex_digest(std::string_view s);

}  // namespace ica

#endif  // ICA_DIGEST_HPP_
