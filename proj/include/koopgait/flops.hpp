#pragma once

// Analytical FLOPs accounting (2 x multiply-adds; bias, normalisation and
// activations are not counted).
//
//   conv2d: 2 * Cin * N^2 * Cout * W * H
//   conv3d: 2 * Cin * N^3 * Cout * W * H * T
//   dense:  2 * I * O
//
// each multiplied by the layer's repetition count.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace koopgait::flops {

enum class LayerKind { Conv2d, Conv3d, Dense };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Dense;
  std::uint64_t c_in = 0, c_out = 0, n = 0;
  std::uint64_t width = 0, height = 0, time = 0;
  std::uint64_t i = 0, o = 0;
  std::uint64_t uses = 1;
};

std::uint64_t layer_flops(const LayerSpec& spec);

double fc_conv_ratio(std::uint64_t i, std::uint64_t o, std::uint64_t c_in, std::uint64_t c_out, std::uint64_t n,
                     std::uint64_t w_post, std::uint64_t h_post);

double fl_score(double flops);

struct LayerCost {
  std::string name;
  LayerKind kind;
  std::uint64_t flops;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::uint64_t total = 0;
  std::uint64_t dense = 0;
  std::uint64_t conv = 0;
  double fl_score = 0.0;

  double gflops() const { return static_cast<double>(total) / 1e9; }
  double dense_share() const { return total ? static_cast<double>(dense) / static_cast<double>(total) : 0.0; }
  double conv_share() const { return total ? static_cast<double>(conv) / static_cast<double>(total) : 0.0; }
};

CostReport model_cost(const std::vector<LayerSpec>& specs);

// JSON spec file: {"model": "...", "layers": [{"kind": "dense", "i": 2048, "o": 2048, "uses": 2}, ...]}
// or a bare array of layer objects.
std::vector<LayerSpec> load_specs(const std::filesystem::path& path);

// Per-layer rows followed by dense/conv/total summary rows.
void write_cost_csv(const CostReport& report, const std::filesystem::path& path);

// Two significant figures, e.g. 0.0168 -> "0.017", 5882.35 -> "5.9e+03".
std::string format_sig(double value, int digits);

std::string to_string(LayerKind kind);

}  // namespace koopgait::flops
