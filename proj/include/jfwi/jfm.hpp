#pragma once

#include <filesystem>
#include <variant>

#include "jfwi/core.hpp"

namespace jfwi {

/// JFM1 binary matrix files.
///
/// Layout (little-endian): 8-byte magic "JFIFMAT1", u64 rows, u64 cols,
/// u8 dtype (0 = f64, 1 = complex f64 stored as interleaved re, im), then the
/// payload in column-major order. A model grid is written as an nz x nx
/// matrix, so the payload is z-fastest.
namespace jfm {

enum class DType : std::uint8_t { Real = 0, Complex = 1 };

using AnyMatrix = std::variant<RMatrix, CMatrix>;

void write(const std::filesystem::path& path, const RMatrix& a);
void write(const std::filesystem::path& path, const CMatrix& a);
void write(const std::filesystem::path& path, const ModelGrid& g);

AnyMatrix read(const std::filesystem::path& path);
RMatrix read_real(const std::filesystem::path& path);
/// Real files are promoted to complex.
CMatrix read_complex(const std::filesystem::path& path);

}  // namespace jfm
}  // namespace jfwi
