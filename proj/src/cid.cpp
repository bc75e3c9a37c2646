#include "fslsim/cid.hpp"

#include <algorithm>
#include <stdexcept>

#include "fslsim/sha256.hpp"

namespace fslsim {

static const char* kBase58Alphabet =
    "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz";

std::string base58_encode(const Bytes& in) {
    size_t zeros = 0;
    while (zeros < in.size() && in[zeros] == 0) ++zeros;

    // big-number base conversion; log(256)/log(58) ~ 1.37 digits per byte
    std::vector<uint8_t> b58((in.size() - zeros) * 138 / 100 + 1, 0);
    size_t length = 0;
    for (size_t i = zeros; i < in.size(); ++i) {
        int carry = in[i];
        size_t j = 0;
        for (auto it = b58.rbegin(); (carry != 0 || j < length) && it != b58.rend();
             ++it, ++j) {
            carry += 256 * (*it);
            *it = uint8_t(carry % 58);
            carry /= 58;
        }
        length = j;
    }
    std::string out(zeros, '1');
    auto it = b58.begin() + (b58.size() - length);
    while (it != b58.end()) out.push_back(kBase58Alphabet[*it++]);
    return out;
}

Cid::Cid(std::string t) : text(std::move(t)) {
    if (!valid(text)) throw std::invalid_argument("malformed cid: " + text);
}

bool Cid::valid(const std::string& t) {
    if (t.size() != kLength) return false;
    if (t[0] != 'Q' || t[1] != 'm') return false;
    for (size_t i = 2; i < t.size(); ++i) {
        if (std::string(kBase58Alphabet).find(t[i]) == std::string::npos) return false;
    }
    return true;
}

Cid cid_from_bytes(const Bytes& data) {
    auto digest = sha256(data);
    Bytes digest_bytes(digest.begin(), digest.end());
    std::string b58 = base58_encode(digest_bytes);
    // normalize to exactly 44 characters: pad with leading '1', or truncate
    const size_t body = Cid::kLength - 2;
    if (b58.size() < body) b58.insert(b58.begin(), body - b58.size(), '1');
    if (b58.size() > body) b58.resize(body);
    Cid c;
    c.text = "Qm" + b58;
    return c;
}

}  // namespace fslsim
