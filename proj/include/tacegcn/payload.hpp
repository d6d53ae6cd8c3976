#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tacegcn {

// Binary payloads in checkpoint and cohort files are little-endian 32-bit
// floats, base64-encoded.

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

std::string pack_f32(const std::vector<double>& values);
std::vector<double> unpack_f32(const std::string& base64_text);

}  // namespace tacegcn
