#include "ananet/anaf.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ananet/error.hpp"

namespace ananet::dataio {

namespace {

constexpr std::uint8_t kMagic[4] = {'A', 'N', 'A', 'F'};

template <typename UInt>
void put_le(std::vector<std::uint8_t>& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

template <typename UInt>
UInt get_le(const std::uint8_t* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(p[i]) << (8 * i);
  }
  return v;
}

void need(std::span<const std::uint8_t> bytes, std::size_t pos, std::size_t count,
          std::size_t base, const char* what) {
  if (bytes.size() < pos || bytes.size() - pos < count) {
    throw FormatError(std::string("ANAF truncated while reading ") + what,
                      base + std::min(pos, bytes.size()));
  }
}

}  // namespace

void encode_anaf(const AnafArray& array, Dtype dtype, std::vector<std::uint8_t>& out) {
  if (array.dims.size() > kMaxAnafRank) {
    throw ShapeError("ANAF supports rank <= 2, got rank " +
                     std::to_string(array.dims.size()));
  }
  std::size_t count = 1;
  for (auto d : array.dims) count *= d;
  if (count != array.values.size()) {
    throw ShapeError("ANAF dims do not match value count");
  }
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kAnafVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(array.dims.size()));
  for (auto d : array.dims) put_le<std::uint32_t>(out, d);
  for (double v : array.values) {
    if (dtype == Dtype::float32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
}

AnafArray decode_anaf(std::span<const std::uint8_t> bytes, std::size_t& pos,
                      std::size_t base) {
  need(bytes, pos, 4, base, "magic");
  if (std::memcmp(bytes.data() + pos, kMagic, 4) != 0) {
    throw FormatError("bad ANAF magic", base + pos);
  }
  need(bytes, pos + 4, 2, base, "version");
  const auto version = get_le<std::uint16_t>(bytes.data() + pos + 4);
  if (version != kAnafVersion) {
    throw FormatError("unsupported ANAF version " + std::to_string(version),
                      base + pos + 4);
  }
  need(bytes, pos + 6, 2, base, "dtype/rank");
  const std::uint8_t dtype = bytes[pos + 6];
  if (dtype > static_cast<std::uint8_t>(Dtype::float64)) {
    throw FormatError("unknown ANAF dtype " + std::to_string(dtype), base + pos + 6);
  }
  const std::uint8_t rank = bytes[pos + 7];
  if (rank > kMaxAnafRank) {
    throw FormatError("ANAF rank " + std::to_string(rank) + " exceeds 2", base + pos + 7);
  }
  pos += 8;
  need(bytes, pos, 4u * rank, base, "dims");
  AnafArray array;
  std::size_t count = 1;
  for (std::size_t k = 0; k < rank; ++k) {
    array.dims.push_back(get_le<std::uint32_t>(bytes.data() + pos));
    count *= array.dims.back();
    pos += 4;
  }
  const std::size_t width = dtype == 0 ? 4 : 8;
  need(bytes, pos, count * width, base, "payload");
  array.values.resize(count);
  for (std::size_t i = 0; i < count; ++i, pos += width) {
    double v = dtype == 0
                   ? static_cast<double>(
                         std::bit_cast<float>(get_le<std::uint32_t>(bytes.data() + pos)))
                   : std::bit_cast<double>(get_le<std::uint64_t>(bytes.data() + pos));
    if (!std::isfinite(v)) throw FormatError("non-finite ANAF value", base + pos);
    array.values[i] = v;
  }
  return array;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m, Dtype dtype) {
  AnafArray array{{static_cast<std::uint32_t>(m.rows), static_cast<std::uint32_t>(m.cols)},
                  m.values};
  std::vector<std::uint8_t> bytes;
  bytes.reserve(anaf_header_size(2) + m.values.size() * 8);
  encode_anaf(array, dtype, bytes);
  write_file_bytes(path, bytes);
}

Matrix read_matrix(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t pos = 0;
  AnafArray array = decode_anaf(bytes, pos);
  if (pos != bytes.size()) {
    throw FormatError("trailing bytes after ANAF payload in " + path.string(), pos);
  }
  switch (array.dims.size()) {
    case 0:
      return Matrix(1, 1, std::move(array.values));
    case 1:
      return Matrix(1, array.dims[0], std::move(array.values));
    default:
      return Matrix(array.dims[0], array.dims[1], std::move(array.values));
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace ananet::dataio
