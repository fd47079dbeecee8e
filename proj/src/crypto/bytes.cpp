#include "cdk/bytes.hpp"

#include <sodium.h>

namespace cdk {

std::string to_hex(std::span<const std::uint8_t> data)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (const std::uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex)
{
    if (hex.size() % 2 != 0) {
        throw DecodeError("hex string has odd length");
    }
    auto nibble = [](char c) -> std::uint8_t {
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw DecodeError("invalid hex digit");
    };
    Bytes out(hex.size() / 2);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = static_cast<std::uint8_t>((nibble(hex[2 * k]) << 4) | nibble(hex[2 * k + 1]));
    }
    return out;
}

Digest sha256(std::span<const std::uint8_t> data)
{
    Digest out{};
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

Bytes as_bytes(std::string_view text)
{
    return Bytes(text.begin(), text.end());
}

void ByteWriter::raw(std::span<const std::uint8_t> data)
{
    buffer_.insert(buffer_.end(), data.begin(), data.end());
}

void ByteWriter::byte(std::uint8_t value)
{
    buffer_.push_back(value);
}

void ByteWriter::u32(std::uint32_t value)
{
    for (int shift = 24; shift >= 0; shift -= 8) {
        buffer_.push_back(static_cast<std::uint8_t>(value >> shift));
    }
}

void ByteWriter::u64(std::uint64_t value)
{
    for (int shift = 56; shift >= 0; shift -= 8) {
        buffer_.push_back(static_cast<std::uint8_t>(value >> shift));
    }
}

void ByteWriter::field(std::span<const std::uint8_t> data)
{
    u32(static_cast<std::uint32_t>(data.size()));
    raw(data);
}

void ByteWriter::field(std::string_view text)
{
    u32(static_cast<std::uint32_t>(text.size()));
    buffer_.insert(buffer_.end(), text.begin(), text.end());
}

void ByteWriter::field_u32(std::uint32_t value)
{
    u32(4);
    u32(value);
}

void ByteWriter::field_u64(std::uint64_t value)
{
    u32(8);
    u64(value);
}

std::uint8_t ByteReader::byte()
{
    return raw(1)[0];
}

std::uint32_t ByteReader::u32()
{
    const auto b = raw(4);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

std::uint64_t ByteReader::u64()
{
    const auto b = raw(8);
    std::uint64_t value = 0;
    for (const std::uint8_t x : b) {
        value = (value << 8) | x;
    }
    return value;
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t count)
{
    if (count > remaining()) {
        throw DecodeError("unexpected end of input");
    }
    auto out = data_.subspan(offset_, count);
    offset_ += count;
    return out;
}

std::span<const std::uint8_t> ByteReader::field()
{
    const std::uint32_t length = u32();
    return raw(length);
}

std::string ByteReader::field_string()
{
    const auto body = field();
    return std::string(body.begin(), body.end());
}

std::uint32_t ByteReader::field_u32()
{
    ByteReader body(field());
    const auto value = body.u32();
    body.expect_end();
    return value;
}

std::uint64_t ByteReader::field_u64()
{
    ByteReader body(field());
    const auto value = body.u64();
    body.expect_end();
    return value;
}

void ByteReader::expect_end() const
{
    if (!at_end()) {
        throw DecodeError("trailing bytes after canonical encoding");
    }
}

}  // namespace cdk
