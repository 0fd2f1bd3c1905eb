#include "labelgen/formats.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "labelgen/error.hpp"

namespace labelgen::formats {

namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "write to '" + path.string() + "' failed");
}

std::string read_text_file(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const fs::path& path, std::string_view text) {
  write_file_bytes(path, std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

// --- PNM -------------------------------------------------------------------

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

struct PnmHeader {
  int width = 0;
  int height = 0;
  std::size_t payload_offset = 0;
};

PnmHeader parse_pnm_header(std::span<const std::uint8_t> bytes, std::string_view magic) {
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
    throw Error(ErrorKind::kMalformedHeader, "expected " + std::string(magic) + " magic");
  }
  std::size_t pos = 2;
  auto next_number = [&](const char* what) -> long {
    if (pos >= bytes.size() || !is_space(bytes[pos])) {
      throw Error(ErrorKind::kMalformedHeader, std::string("missing separator before ") + what);
    }
    while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
    const std::size_t start = pos;
    long value = 0;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      value = value * 10 + (bytes[pos] - '0');
      if (value > 1'000'000) throw Error(ErrorKind::kMalformedHeader, std::string(what) + " too large");
      ++pos;
    }
    if (pos == start) throw Error(ErrorKind::kMalformedHeader, std::string("missing ") + what);
    return value;
  };
  PnmHeader header;
  header.width = static_cast<int>(next_number("width"));
  header.height = static_cast<int>(next_number("height"));
  const long maxval = next_number("maxval");
  if (pos >= bytes.size() || !is_space(bytes[pos])) {
    throw Error(ErrorKind::kMalformedHeader, "missing separator after maxval");
  }
  if (maxval != 255) {
    throw Error(ErrorKind::kBadMaxval, "maxval " + std::to_string(maxval) + " != 255");
  }
  if (header.width < 1 || header.height < 1) {
    throw Error(ErrorKind::kMalformedHeader, "zero extent");
  }
  header.payload_offset = pos + 1;
  return header;
}

std::span<const std::uint8_t> checked_payload(std::span<const std::uint8_t> bytes,
                                              const PnmHeader& header, std::size_t expected) {
  const std::size_t available = bytes.size() - header.payload_offset;
  if (available < expected) {
    throw Error(ErrorKind::kTruncatedPayload, "payload has " + std::to_string(available) +
                                                  " bytes, header declares " +
                                                  std::to_string(expected));
  }
  if (available > expected) {
    throw Error(ErrorKind::kTrailingData,
                std::to_string(available - expected) + " bytes after payload");
  }
  return bytes.subspan(header.payload_offset, expected);
}

std::vector<std::uint8_t> encode_pnm(std::string_view magic, int width, int height,
                                     std::span<const std::uint8_t> payload) {
  const std::string header = std::string(magic) + "\n" + std::to_string(width) + " " +
                             std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

// --- little-endian helpers ---------------------------------------------------

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
  return v;
}

constexpr std::array<char, 4> kEmbeddingMagic{'E', 'M', 'B', '1'};

[[noreturn]] void fail_at(ErrorKind kind, std::string_view source, std::size_t line,
                          const std::string& message) {
  throw Error(kind, std::string(source) + ":" + std::to_string(line) + ": " + message);
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::string optional_real(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string("-");
}

}  // namespace

std::vector<std::uint8_t> encode_pgm(const Mask& mask) {
  return encode_pnm("P5", mask.width(), mask.height(), mask.labels());
}

Mask decode_pgm(std::span<const std::uint8_t> bytes) {
  const PnmHeader header = parse_pnm_header(bytes, "P5");
  const auto payload = checked_payload(
      bytes, header, static_cast<std::size_t>(header.width) * static_cast<std::size_t>(header.height));
  return Mask(header.width, header.height, std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

Mask read_mask(const fs::path& path) {
  try {
    return decode_pgm(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_mask(const Mask& mask, const fs::path& path) {
  write_file_bytes(path, encode_pgm(mask));
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  return encode_pnm("P6", image.width(), image.height(), image.data());
}

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  const PnmHeader header = parse_pnm_header(bytes, "P6");
  const auto payload =
      checked_payload(bytes, header,
                      static_cast<std::size_t>(header.width) *
                          static_cast<std::size_t>(header.height) * Image::kChannels);
  return Image(header.width, header.height,
               std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

Image read_image(const fs::path& path) {
  try {
    return decode_ppm(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_image(const Image& image, const fs::path& path) {
  write_file_bytes(path, encode_ppm(image));
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  std::vector<std::uint8_t> out(kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  out.reserve(12 + set.values().size() * 4);
  put_u32(out, static_cast<std::uint32_t>(set.count()));
  put_u32(out, static_cast<std::uint32_t>(set.dim()));
  for (double v : set.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !std::equal(kEmbeddingMagic.begin(), kEmbeddingMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::kBadMagic, "missing EMB1 magic");
  }
  const std::uint64_t n = get_u32(bytes, 4);
  const std::uint64_t d = get_u32(bytes, 8);
  const std::uint64_t expected = n * d * 4;
  if (bytes.size() - 12 != expected) {
    throw Error(ErrorKind::kSizeMismatch, "header declares " + std::to_string(n) + "x" +
                                              std::to_string(d) + " (" + std::to_string(expected) +
                                              " bytes), payload has " +
                                              std::to_string(bytes.size() - 12));
  }
  std::vector<double> values(n * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = std::bit_cast<float>(get_u32(bytes, 12 + 4 * i));
    if (!std::isfinite(f)) {
      throw Error(ErrorKind::kNonFinite, "embedding value at row " + std::to_string(i / d) +
                                             " column " + std::to_string(i % d) + " is not finite");
    }
    values[i] = f;
  }
  return EmbeddingSet(n, d, std::move(values));
}

EmbeddingSet read_embeddings(const fs::path& path) {
  try {
    return decode_embeddings(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_embeddings(const EmbeddingSet& set, const fs::path& path) {
  write_file_bytes(path, encode_embeddings(set));
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out = std::string(kManifestMagic) + " " + manifest.name + "\n";
  for (const auto& [key, value] : manifest.metadata) out += "#" + key + "=" + value + "\n";
  for (const auto& e : manifest.entries) {
    out += e.id;
    out += '\t';
    out += std::to_string(e.class_id);
    out += '\t';
    out += e.image_path;
    out += '\t';
    out += e.mask_path;
    out += '\t';
    out += to_string(e.provenance);
    out += '\t';
    out += std::to_string(e.latent_seed);
    out += '\t';
    out += optional_real(e.confidence);
    out += '\t';
    out += optional_real(e.uncertainty);
    out += '\n';
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view text, std::string_view source) {
  DatasetManifest manifest;
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) fail_at(ErrorKind::kMalformedHeader, source, 1, "empty manifest");

  const std::string_view header = strip_cr(lines[0]);
  if (header.substr(0, kManifestMagic.size()) != kManifestMagic ||
      (header.size() > kManifestMagic.size() && header[kManifestMagic.size()] != ' ')) {
    fail_at(ErrorKind::kMalformedHeader, source, 1, "expected 'LGKITv1 <name>' header");
  }
  if (header.size() > kManifestMagic.size()) {
    manifest.name = std::string(header.substr(kManifestMagic.size() + 1));
  }

  std::set<std::string, std::less<>> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = strip_cr(lines[i]);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        fail_at(ErrorKind::kParse, source, line_no, "metadata line without '='");
      }
      manifest.metadata.emplace_back(std::string(line.substr(1, eq - 1)),
                                     std::string(line.substr(eq + 1)));
      continue;
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 8) {
      fail_at(ErrorKind::kMissingField, source, line_no,
              "expected 8 tab-separated fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t f = 0; f < 6; ++f) {
      if (fields[f].empty() || fields[f] == "-") {
        fail_at(ErrorKind::kMissingField, source, line_no,
                "required field " + std::to_string(f + 1) + " is empty");
      }
    }
    SampleRecord record;
    try {
      record.id = std::string(fields[0]);
      record.class_id = static_cast<int>(parse_int(fields[1]));
      record.image_path = std::string(fields[2]);
      record.mask_path = std::string(fields[3]);
      record.provenance = parse_provenance(fields[4]);
      record.latent_seed = parse_uint(fields[5]);
      if (fields[6] != "-") record.confidence = parse_real(fields[6]);
      if (fields[7] != "-") record.uncertainty = parse_real(fields[7]);
    } catch (const Error& e) {
      fail_at(e.kind(), source, line_no, e.what());
    }
    if (!ids.insert(record.id).second) {
      fail_at(ErrorKind::kDuplicateId, source, line_no, "duplicate id '" + record.id + "'");
    }
    if (record.image_path.front() == '/' || record.mask_path.front() == '/') {
      fail_at(ErrorKind::kParse, source, line_no, "entry paths must be relative");
    }
    manifest.entries.push_back(std::move(record));
  }
  return manifest;
}

DatasetManifest read_manifest(const fs::path& path) {
  return parse_manifest(read_text_file(path), path.string());
}

void write_manifest(const DatasetManifest& manifest, const fs::path& path) {
  manifest.validate();
  write_text_file(path, format_manifest(manifest));
}

fs::path resolve_entry_path(const fs::path& manifest_path, std::string_view entry_path) {
  return manifest_path.parent_path() / fs::path(entry_path);
}

std::string format_taxonomy(const ClassTaxonomy& taxonomy) {
  std::string out = "LGTAXv1\n";
  for (const auto& [id, name] : taxonomy.classes) {
    out += "class\t" + std::to_string(id) + "\t" + name + "\n";
  }
  for (const auto& [task, mapping] : taxonomy.groups) {
    for (const auto& [id, label] : mapping) {
      out += "group\t" + task + "\t" + std::to_string(id) + "\t" + std::to_string(label) + "\n";
    }
  }
  return out;
}

ClassTaxonomy parse_taxonomy(std::string_view text, std::string_view source) {
  ClassTaxonomy taxonomy;
  const auto lines = split(text, '\n');
  if (lines.empty() || strip_cr(lines[0]) != "LGTAXv1") {
    fail_at(ErrorKind::kMalformedHeader, source, 1, "expected 'LGTAXv1' header");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = strip_cr(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    try {
      if (fields[0] == "class" && fields.size() == 3) {
        taxonomy.classes[static_cast<int>(parse_int(fields[1]))] = std::string(fields[2]);
      } else if (fields[0] == "group" && fields.size() == 4) {
        taxonomy.groups[std::string(fields[1])][static_cast<int>(parse_int(fields[2]))] =
            static_cast<int>(parse_int(fields[3]));
      } else {
        fail_at(ErrorKind::kParse, source, i + 1, "unrecognized record");
      }
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with(source)) throw;
      fail_at(e.kind(), source, i + 1, e.what());
    }
  }
  taxonomy.validate();
  return taxonomy;
}

ClassTaxonomy read_taxonomy(const fs::path& path) {
  return parse_taxonomy(read_text_file(path), path.string());
}

void write_taxonomy(const ClassTaxonomy& taxonomy, const fs::path& path) {
  write_text_file(path, format_taxonomy(taxonomy));
}

std::string format_real(double value) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

std::string format_fixed(double value, int decimals) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                       std::chars_format::fixed, decimals);
  if (ec != std::errc()) return format_real(value);
  std::string out(buf.data(), end);
  if (out.starts_with("-") && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw Error(ErrorKind::kParse, "not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw Error(ErrorKind::kParse, "not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t parse_uint(std::string_view text) {
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw Error(ErrorKind::kParse, "not an unsigned integer: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char delimiter) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(delimiter, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      break;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

}  // namespace labelgen::formats
