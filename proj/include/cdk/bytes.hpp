#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cdk {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

/// Thrown when a byte stream does not follow the canonical layout.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);

template <std::size_t N>
std::array<std::uint8_t, N> array_from_hex(std::string_view hex)
{
    const Bytes raw = from_hex(hex);
    if (raw.size() != N) {
        throw DecodeError("hex string has wrong length");
    }
    std::array<std::uint8_t, N> out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

Digest sha256(std::span<const std::uint8_t> data);
Bytes as_bytes(std::string_view text);

// Canonical composite encoding: every field is a 4-byte big-endian length
// followed by the field bytes. Lists are a field whose body is a 4-byte
// big-endian count followed by each element as a field.
class ByteWriter {
public:
    void raw(std::span<const std::uint8_t> data);
    void byte(std::uint8_t value);
    void u32(std::uint32_t value);
    void u64(std::uint64_t value);
    void field(std::span<const std::uint8_t> data);
    void field(std::string_view text);
    void field_u32(std::uint32_t value);
    void field_u64(std::uint64_t value);

    template <typename Range, typename Encode>
    void list(const Range &items, Encode &&encode)
    {
        ByteWriter body;
        body.u32(static_cast<std::uint32_t>(std::size(items)));
        for (const auto &item : items) {
            ByteWriter element;
            encode(element, item);
            body.field(element.bytes());
        }
        field(body.bytes());
    }

    const Bytes &bytes() const noexcept { return buffer_; }
    Bytes take() noexcept { return std::move(buffer_); }

private:
    Bytes buffer_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t byte();
    std::uint32_t u32();
    std::uint64_t u64();
    std::span<const std::uint8_t> raw(std::size_t count);
    std::span<const std::uint8_t> field();
    std::string field_string();
    std::uint32_t field_u32();
    std::uint64_t field_u64();

    template <std::size_t N>
    std::array<std::uint8_t, N> field_array()
    {
        const auto body = field();
        if (body.size() != N) {
            throw DecodeError("fixed-size field has wrong length");
        }
        std::array<std::uint8_t, N> out{};
        std::copy(body.begin(), body.end(), out.begin());
        return out;
    }

    template <typename Decode>
    auto list(Decode &&decode)
    {
        ByteReader body(field());
        const std::uint32_t count = body.u32();
        using Item = decltype(decode(std::declval<ByteReader &>()));
        std::vector<Item> items;
        if (count > body.remaining()) {
            throw DecodeError("list count exceeds available bytes");
        }
        items.reserve(count);
        for (std::uint32_t k = 0; k < count; ++k) {
            ByteReader element(body.field());
            items.push_back(decode(element));
            element.expect_end();
        }
        body.expect_end();
        return items;
    }

    std::size_t remaining() const noexcept { return data_.size() - offset_; }
    bool at_end() const noexcept { return offset_ == data_.size(); }
    void expect_end() const;

private:
    std::span<const std::uint8_t> data_;
    std::size_t offset_ = 0;
};

}  // namespace cdk
