#pragma once

#include <filesystem>

#include <Eigen/Dense>

namespace koopgait {

// Reads an 8-bit (or 16-bit PGM) grayscale image into [0,1] values,
// indexed (row, col). Accepts PGM P2/P5 and PNG.
Eigen::MatrixXd read_gray_image(const std::filesystem::path& path);

// Writes values clamped to [0,1] as binary PGM (P5, maxval 255).
void write_pgm(const Eigen::MatrixXd& image, const std::filesystem::path& path);

// Writes a non-negative map linearly rescaled so its maximum becomes 255.
void write_heatmap_pgm(const Eigen::MatrixXd& map, const std::filesystem::path& path);

bool is_image_file(const std::filesystem::path& path);

}  // namespace koopgait
