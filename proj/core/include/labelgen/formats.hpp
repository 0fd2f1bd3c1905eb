#pragma once

// On-disk formats shared by every module.
//
//   mask       PGM  "P5\n<w> <h>\n255\n" + w*h label bytes
//   image      PPM  "P6\n<w> <h>\n255\n" + 3*w*h RGB bytes
//   embeddings "EMB1" + u32le n + u32le d + n*d float32le, row-major
//   manifest   "LGKITv1 <name>\n", "#key=value" metadata lines, then
//              id \t class_id \t image \t mask \t provenance \t seed \t conf \t unc
//   taxonomy   "LGTAXv1\n", "class\t<id>\t<name>" and "group\t<task>\t<id>\t<label>"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "labelgen/types.hpp"

namespace labelgen::formats {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::vector<std::uint8_t> encode_pgm(const Mask& mask);
Mask decode_pgm(std::span<const std::uint8_t> bytes);
Mask read_mask(const std::filesystem::path& path);
void write_mask(const Mask& mask, const std::filesystem::path& path);

std::vector<std::uint8_t> encode_ppm(const Image& image);
Image decode_ppm(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);
void write_image(const Image& image, const std::filesystem::path& path);

/// Values are stored as float32; doubles that are not representable round.
std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set);
EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes);
EmbeddingSet read_embeddings(const std::filesystem::path& path);
void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

inline constexpr std::string_view kManifestMagic = "LGKITv1";

std::string format_manifest(const DatasetManifest& manifest);
/// `source` names the input in diagnostics ("<source>:<line>: ...").
DatasetManifest parse_manifest(std::string_view text, std::string_view source = "manifest");
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Resolves an entry path against the directory holding the manifest.
std::filesystem::path resolve_entry_path(const std::filesystem::path& manifest_path,
                                         std::string_view entry_path);

std::string format_taxonomy(const ClassTaxonomy& taxonomy);
ClassTaxonomy parse_taxonomy(std::string_view text, std::string_view source = "taxonomy");
ClassTaxonomy read_taxonomy(const std::filesystem::path& path);
void write_taxonomy(const ClassTaxonomy& taxonomy, const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_real(double value);
/// Fixed-point with `decimals` digits.
std::string format_fixed(double value, int decimals);
/// Strict parse: the whole string must be consumed.
double parse_real(std::string_view text);
std::int64_t parse_int(std::string_view text);
std::uint64_t parse_uint(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char delimiter);

}  // namespace labelgen::formats
