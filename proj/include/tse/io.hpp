#pragma once

// Portable on-disk formats.
//
//   PGM (P5):  "P5\n<width> <height>\n255\n" followed by width*height bytes.
//   FPLANES:   "FPLANES <planes> <width> <height>\n" followed by
//              planes*height*width little-endian float32 values,
//              plane-major and row-major within a plane.
//
// Binary masks are PGM files holding {0, 255}. Per-region vectors are stored
// as FPLANES with width = N and height = 1.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tse/image.hpp"

namespace tse::io {

Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& image);

// Parses PGM bytes already in memory; `origin` only labels error messages.
Image decode_pgm(std::span<const unsigned char> bytes, const std::string& origin = "<memory>");
std::vector<unsigned char> encode_pgm(const Image& image);

// Binary mask: any nonzero byte is foreground (1). Saved as {0, 255}.
PixelLabelMap load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const PixelLabelMap& mask);

// Raw float planes, no semantic validation.
PlaneStack load_planes(const std::filesystem::path& path);
void save_planes(const std::filesystem::path& path, const PlaneStack& planes);

PlaneStack decode_planes(std::span<const unsigned char> bytes, const std::string& origin = "<memory>");
std::vector<unsigned char> encode_planes(const PlaneStack& planes);

// Four-class probability map. Rejects plane counts other than 4, values
// outside [-1e-6, 1 + 1e-6] and pixels whose class sum leaves [1 - 1e-4, 1 + 1e-4].
PixelProbMap load_prob_map(const std::filesystem::path& path);
void validate_prob_map(const PixelProbMap& prob, const std::string& origin = "<memory>");
void save_prob_map(const std::filesystem::path& path, const PixelProbMap& prob);

// Superpixel index maps (single plane, indices stored exactly as floats).
PixelLabelMap load_index_map(const std::filesystem::path& path);
void save_index_map(const std::filesystem::path& path, const PixelLabelMap& map);

// Per-region value vectors, one or more rows of length N.
std::vector<double> load_region_vector(const std::filesystem::path& path);
void save_region_vector(const std::filesystem::path& path, std::span<const double> values);

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes);

}  // namespace tse::io
