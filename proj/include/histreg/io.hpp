#pragma once

#include <filesystem>
#include <string>

#include "histreg/types.hpp"

namespace histreg::io {

// Match CSV: header `x_src,y_src,x_dst,y_dst[,provenance]`. Rows missing the
// provenance column are tagged "unknown". A header-only file is an empty set.
MatchSet read_match_csv(const std::filesystem::path &path);
MatchSet parse_match_csv(const std::string &text);
void write_match_csv(const MatchSet &set, const std::filesystem::path &path);
std::string format_match_csv(const MatchSet &set);

// ANHIR landmark CSV: header `,X,Y`, rows `index,X,Y` with index 0..n-1.
LandmarkSet read_landmarks_csv(const std::filesystem::path &path);
LandmarkSet parse_landmarks_csv(const std::string &text);
void write_landmarks_csv(const LandmarkSet &landmarks, const std::filesystem::path &path);

// DVF1 raster: "DVF1", u32 LE width, u32 LE height, then width*height
// (dx, dy) float32 LE records, row-major.
DvfRaster read_dvf(const std::filesystem::path &path);
DvfRaster decode_dvf(const std::string &bytes);
void write_dvf(const DvfRaster &raster, const std::filesystem::path &path);
std::string encode_dvf(const DvfRaster &raster);

// 8-bit grayscale or RGB PNG. Palette and sub-byte gray images are expanded,
// alpha is dropped; 16-bit images are rejected.
ImageBuffer read_image(const std::filesystem::path &path);
void write_image(const ImageBuffer &image, const std::filesystem::path &path);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);

}  // namespace histreg::io
