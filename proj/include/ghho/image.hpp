#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>

namespace ghho {

/// 8-bit grayscale image, row-major; rows() is the height and cols() the width.
using GrayImage = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Decodes PNG, JPEG or binary PGM (P5) into 8-bit luminance. The format is
/// sniffed from the file signature, not the extension. Throws DataError.
GrayImage read_image(const std::filesystem::path& path);

/// Writes a binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Centres the image on a square black canvas, then bilinearly resamples it to
/// size x size.
GrayImage pad_and_resize(const GrayImage& image, int size);

GrayImage rotate90(const GrayImage& image);  // clockwise
GrayImage rotate180(const GrayImage& image);
GrayImage rotate270(const GrayImage& image);
GrayImage flip_horizontal(const GrayImage& image);
GrayImage flip_vertical(const GrayImage& image);
/// Adds delta to every pixel, saturating at 0 and 255.
GrayImage adjust_brightness(const GrayImage& image, int delta);

}  // namespace ghho
