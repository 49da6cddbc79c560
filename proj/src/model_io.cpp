#include "ananet/model_io.hpp"

#include <bit>
#include <cstring>
#include <string>

#include "ananet/anaf.hpp"
#include "ananet/error.hpp"

namespace ananet {

namespace {

constexpr char kMagic[4] = {'A', 'N', 'A', 'M'};

std::string versioned(const std::string& what) {
  return "model file (format v" + std::to_string(kModelFileVersion) + "): " + what;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u(std::span<const std::uint8_t> bytes, std::size_t& pos, int width,
                    const char* field) {
  if (bytes.size() - pos < static_cast<std::size_t>(width)) {
    throw FormatError(versioned(std::string("truncated ") + field), pos);
  }
  std::uint32_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
  pos += width;
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_model(const model::Model& model, const RunConfig& config) {
  const auto params = model.parameters();
  nlohmann::ordered_json header;
  header["config"] = to_json(config);
  header["tensors"] = nlohmann::ordered_json::array();
  for (const auto& p : params) {
    header["tensors"].push_back({{"name", p.name}, {"dims", p.tensor.dims()}});
  }
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u16(out, kModelFileVersion);
  put_u16(out, 0);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    dataio::AnafArray a;
    for (auto d : p.tensor.dims()) a.dims.push_back(static_cast<std::uint32_t>(d));
    if (a.dims.size() > dataio::kMaxAnafRank) {
      throw ShapeError("cannot store tensor '" + p.name + "' of rank " +
                       std::to_string(a.dims.size()));
    }
    a.values.assign(p.tensor.values().begin(), p.tensor.values().end());
    dataio::encode_anaf(a, dataio::Dtype::float64, out);
  }
  return out;
}

LoadedModel decode_model(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(versioned("bad magic, expected \"ANAM\""), 0);
  }
  pos = 4;
  const auto version = get_u(bytes, pos, 2, "version");
  if (version != kModelFileVersion) {
    throw FormatError(versioned("unsupported version " + std::to_string(version)), 4);
  }
  get_u(bytes, pos, 2, "reserved field");
  const std::size_t header_len = get_u(bytes, pos, 4, "header length");
  if (bytes.size() - pos < header_len) {
    throw FormatError(versioned("truncated header"), pos);
  }
  nlohmann::ordered_json header;
  const std::size_t header_pos = pos;
  try {
    header = nlohmann::ordered_json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                           bytes.begin() +
                                               static_cast<std::ptrdiff_t>(pos + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(versioned(std::string("header is not valid JSON: ") + e.what()),
                      header_pos);
  }
  pos += header_len;

  LoadedModel out;
  try {
    out.config = run_config_from_json(header.at("config"));
    out.config.validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(versioned(std::string("header has no config: ") + e.what()), header_pos);
  } catch (const ConfigError& e) {
    throw FormatError(versioned(std::string("bad config in header: ") + e.what()), header_pos);
  }
  out.model = model::Model(out.config.model, out.config.train.seed);
  const auto params = out.model.parameters();

  const std::size_t count = get_u(bytes, pos, 4, "tensor count");
  const auto& listed = header.contains("tensors") ? header["tensors"] : nlohmann::ordered_json();
  if (count != params.size() || !listed.is_array() || listed.size() != count) {
    throw FormatError(versioned("expected " + std::to_string(params.size()) +
                                " tensors for this configuration, file lists " +
                                std::to_string(count)),
                      pos - 4);
  }
  std::vector<std::vector<double>> values;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = pos;
    dataio::AnafArray a;
    try {
      a = dataio::decode_anaf(bytes, pos, 0);
    } catch (const FormatError& e) {
      throw FormatError(versioned("tensor " + std::to_string(i) + ": " + e.detail()), e.offset());
    }
    const auto& expected = params[i];
    std::vector<std::size_t> dims(a.dims.begin(), a.dims.end());
    if (listed[i].value("name", std::string()) != expected.name ||
        dims != expected.tensor.dims()) {
      throw FormatError(versioned("tensor " + std::to_string(i) + " should be '" +
                                  expected.name + "' " + expected.tensor.shape_string()),
                        at);
    }
    values.push_back(std::move(a.values));
  }
  if (pos != bytes.size()) {
    throw FormatError(versioned(std::to_string(bytes.size() - pos) + " trailing bytes"), pos);
  }
  out.model.restore(values);
  return out;
}

void save_model(const std::filesystem::path& path, const model::Model& model,
                const RunConfig& config) {
  dataio::write_file_bytes(path, encode_model(model, config));
}

LoadedModel load_model(const std::filesystem::path& path) {
  return decode_model(dataio::read_file_bytes(path));
}

}  // namespace ananet
