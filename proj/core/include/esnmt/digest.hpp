#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "esnmt/tensor.hpp"

namespace esnmt {

// Hex SHA-256 over the shape and little-endian bytes of a matrix.
std::string tensor_digest(const Matrix& m);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace esnmt
