#pragma once

#include "ssg/imaging.hpp"

#include <filesystem>

namespace ssg {

/// Raw exact format: text line "IMGF64 N\n" followed by N*N little-endian
/// IEEE doubles in ImageGrid linear order (row j, column i, i fastest).
void write_imgf64(const std::filesystem::path &path, const ImageGrid &img);
ImageGrid read_imgf64(const std::filesystem::path &path);

/// Portable graymap preview, values mapped linearly from [min, max] onto
/// [0, maxval]. maxval 255 or 65535; binary=true writes P5, else P2.
void write_pgm(const std::filesystem::path &path, const ImageGrid &img, bool binary = true, int maxval = 255);
/// Reads P2/P5 (8 or 16 bit) square images; values are returned unscaled.
ImageGrid read_pgm(const std::filesystem::path &path);

/// Writes `bytes` to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path &path, const std::string &bytes);

} // namespace ssg
