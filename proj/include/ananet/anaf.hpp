#pragma once

// "ANAF" little-endian binary array container:
//   magic "ANAF" | version u16 = 1 | dtype u8 | rank u8 | dims u32[rank] | payload
// dtype 0 is IEEE-754 single (feature files); dtype 1 is IEEE-754 double
// (model parameters). Payload is row-major.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ananet/matrix.hpp"

namespace ananet::dataio {

enum class Dtype : std::uint8_t { float32 = 0, float64 = 1 };

inline constexpr std::uint16_t kAnafVersion = 1;
inline constexpr std::size_t kMaxAnafRank = 2;

struct AnafArray {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
};

constexpr std::size_t anaf_header_size(std::size_t rank) { return 8 + 4 * rank; }

/// Appends the encoded array to `out`.
void encode_anaf(const AnafArray& array, Dtype dtype, std::vector<std::uint8_t>& out);
/// Decodes one array starting at `pos`, advancing it past the payload. Error
/// offsets are reported relative to `base_offset + pos`.
AnafArray decode_anaf(std::span<const std::uint8_t> bytes, std::size_t& pos,
                      std::size_t base_offset = 0);

void write_matrix(const std::filesystem::path& path, const Matrix& m,
                  Dtype dtype = Dtype::float32);
/// Rank-1 arrays are returned as a single row.
Matrix read_matrix(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);

}  // namespace ananet::dataio
