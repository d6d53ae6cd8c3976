#include "tacegcn/payload.hpp"

#include <bit>
#include <cstring>

#include "tacegcn/common.hpp"

namespace tacegcn {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back(kAlphabet[v & 63]);
        i += 3;
    }
    std::size_t rem = bytes.size() - i;
    if (rem == 1) {
        std::uint32_t v = bytes[i] << 16;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rem == 2) {
        std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(kAlphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    require(text.size() % 4 == 0, ErrorCode::MalformedRecord, "base64 payload length not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            char c = text[i + k];
            if (c == '=') {
                require(i + 4 == text.size() && k >= 2, ErrorCode::MalformedRecord,
                        "base64 padding in payload interior");
                vals[k] = 0;
                ++pad;
            } else {
                require(pad == 0, ErrorCode::MalformedRecord, "base64 data after padding");
                vals[k] = decode_char(c);
                require(vals[k] >= 0, ErrorCode::MalformedRecord, "invalid base64 character");
            }
        }
        std::uint32_t v = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    return out;
}

std::string pack_f32(const std::vector<double>& values) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(values.size() * 4);
    for (double d : values) {
        std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(d));
        bytes.push_back(static_cast<std::uint8_t>(u & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((u >> 8) & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((u >> 16) & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((u >> 24) & 0xFF));
    }
    return base64_encode(bytes);
}

std::vector<double> unpack_f32(const std::string& base64_text) {
    std::vector<std::uint8_t> bytes = base64_decode(base64_text);
    require(bytes.size() % 4 == 0, ErrorCode::MalformedRecord, "f32 payload byte count not a multiple of 4");
    std::vector<double> out;
    out.reserve(bytes.size() / 4);
    for (std::size_t i = 0; i < bytes.size(); i += 4) {
        std::uint32_t u = static_cast<std::uint32_t>(bytes[i]) |
                          (static_cast<std::uint32_t>(bytes[i + 1]) << 8) |
                          (static_cast<std::uint32_t>(bytes[i + 2]) << 16) |
                          (static_cast<std::uint32_t>(bytes[i + 3]) << 24);
        out.push_back(static_cast<double>(std::bit_cast<float>(u)));
    }
    return out;
}

}  // namespace tacegcn
