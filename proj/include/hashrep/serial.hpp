#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>

#include "hashrep/bytes.hpp"

namespace hashrep {

// Canonical encoding shared by every document and wire format:
//   - integers fixed-width big-endian
//   - fixed-size byte arrays raw, no length
//   - variable-length byte strings prefixed with a 4-byte big-endian length
//   - lists prefixed with a 4-byte big-endian element count
//   - optionals as a 1-byte presence flag followed by the value
//   - top-level documents carry a 1-byte type tag
namespace doc_tag {
constexpr uint8_t server_ad = 0x01;
constexpr uint8_t contract = 0x02;
constexpr uint8_t proof_of_breach = 0x03;
constexpr uint8_t storage_submission = 0x04;
}  // namespace doc_tag

class Writer {
public:
    void put_u8(uint8_t v) { out_.push_back(v); }

    void put_u32(uint32_t v) {
        for (int i = 3; i >= 0; --i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void put_u64(uint64_t v) {
        for (int i = 7; i >= 0; --i) out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void put_raw(std::span<const uint8_t> data) { out_.insert(out_.end(), data.begin(), data.end()); }

    template <size_t N>
    void put_array(const std::array<uint8_t, N>& a) {
        put_raw(std::span(a));
    }

    void put_digest(const Digest256& d) { put_raw(std::span(d.bytes)); }

    void put_bytes(std::span<const uint8_t> data) {
        put_u32(static_cast<uint32_t>(data.size()));
        put_raw(data);
    }

    void put_bytes(const Bytes& data) { put_bytes(std::span<const uint8_t>(data)); }

    void put_string(std::string_view s) {
        put_bytes(std::span(reinterpret_cast<const uint8_t*>(s.data()), s.size()));
    }

    const Bytes& bytes() const { return out_; }
    Bytes take() { return std::move(out_); }
    size_t size() const { return out_.size(); }

private:
    Bytes out_;
};

// Bounds-checked reader. Any short read latches the fail flag; callers check
// ok() (and usually at_end()) once after parsing a structure.
class Reader {
public:
    explicit Reader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t get_u8() {
        if (!need(1)) return 0;
        return data_[pos_++];
    }

    uint32_t get_u32() {
        if (!need(4)) return 0;
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | data_[pos_++];
        return v;
    }

    uint64_t get_u64() {
        if (!need(8)) return 0;
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | data_[pos_++];
        return v;
    }

    template <size_t N>
    std::array<uint8_t, N> get_array() {
        std::array<uint8_t, N> out{};
        if (!need(N)) return out;
        std::memcpy(out.data(), data_.data() + pos_, N);
        pos_ += N;
        return out;
    }

    Digest256 get_digest() {
        Digest256 d;
        d.bytes = get_array<32>();
        return d;
    }

    Bytes get_bytes() {
        uint32_t len = get_u32();
        if (!need(len)) return {};
        Bytes out(data_.begin() + pos_, data_.begin() + pos_ + len);
        pos_ += len;
        return out;
    }

    std::string get_string() {
        Bytes b = get_bytes();
        return std::string(b.begin(), b.end());
    }

    bool ok() const { return !failed_; }
    bool at_end() const { return pos_ == data_.size(); }
    bool done() const { return ok() && at_end(); }
    size_t remaining() const { return data_.size() - pos_; }

private:
    bool need(size_t n) {
        if (failed_ || data_.size() - pos_ < n) {
            failed_ = true;
            return false;
        }
        return true;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
    bool failed_ = false;
};

}  // namespace hashrep
