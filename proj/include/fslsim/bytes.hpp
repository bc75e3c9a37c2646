#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace fslsim {

using Bytes = std::vector<uint8_t>;

inline Bytes to_bytes(const std::string& s) {
    return Bytes(s.begin(), s.end());
}

inline std::string to_string(const Bytes& b) {
    return std::string(b.begin(), b.end());
}

// Canonical wire encoding used by ledger records and event payloads:
// little-endian 64-bit integers, length-prefixed byte strings.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }

    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
    }

    void f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }

    void bytes(const Bytes& b) {
        u64(b.size());
        buf_.insert(buf_.end(), b.begin(), b.end());
    }

    void str(const std::string& s) {
        u64(s.size());
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    void raw(const uint8_t* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }

    const Bytes& data() const { return buf_; }
    Bytes take() { return std::move(buf_); }

private:
    Bytes buf_;
};

class ByteReader {
public:
    explicit ByteReader(const Bytes& b) : buf_(b) {}

    uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(buf_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    Bytes bytes() {
        uint64_t n = u64();
        need(n);
        Bytes out(buf_.begin() + pos_, buf_.begin() + pos_ + n);
        pos_ += n;
        return out;
    }

    std::string str() {
        Bytes b = bytes();
        return std::string(b.begin(), b.end());
    }

    bool done() const { return pos_ == buf_.size(); }
    size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(uint64_t n) const {
        if (pos_ + n > buf_.size()) throw std::runtime_error("truncated buffer");
    }
    const Bytes& buf_;
    size_t pos_ = 0;
};

std::string base64_encode(const Bytes& in);
Bytes base64_decode(const std::string& in);

std::string base58_encode(const Bytes& in);

}  // namespace fslsim
