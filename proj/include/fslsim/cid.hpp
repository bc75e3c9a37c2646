#pragma once

#include <string>

#include "fslsim/bytes.hpp"

namespace fslsim {

// 46-character content identifier: "Qm" followed by 44 base58 characters
// derived from the SHA-256 digest of the blob.
struct Cid {
    std::string text;

    Cid() = default;
    explicit Cid(std::string t);

    static constexpr size_t kLength = 46;

    static bool valid(const std::string& t);

    bool operator==(const Cid& other) const = default;
    auto operator<=>(const Cid& other) const = default;
};

Cid cid_from_bytes(const Bytes& data);

}  // namespace fslsim
