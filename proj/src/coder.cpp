#include "koopgait/coder.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "koopgait/tensor.hpp"

namespace koopgait {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

EtBlock make_block(Eigen::Index units, std::mt19937_64& rng, const CoderOptions& opts) {
  EtBlock b(units);
  const double limit = std::sqrt(6.0 / static_cast<double>(2 * units));
  std::uniform_real_distribution<double> dist(-limit, limit);
  // Row-major fill order keeps the draw sequence independent of storage order.
  for (Eigen::Index r = 0; r < units; ++r)
    for (Eigen::Index c = 0; c < units; ++c) b.weight(r, c) = dist(rng);
  b.bn_eps = opts.bn_eps;
  b.bn_momentum = opts.bn_momentum;
  b.use_tanh = opts.use_tanh;
  return b;
}

void save_block(const EtBlock& b, const fs::path& dir, const std::string& prefix) {
  save_tensor(to_tensor(b.weight), dir / (prefix + ".weight.ika"));
  save_tensor(to_tensor(b.bias), dir / (prefix + ".bias.ika"));
  save_tensor(to_tensor(b.bn_gamma), dir / (prefix + ".bn_gamma.ika"));
  save_tensor(to_tensor(b.bn_beta), dir / (prefix + ".bn_beta.ika"));
  save_tensor(to_tensor(b.bn_mean), dir / (prefix + ".bn_mean.ika"));
  save_tensor(to_tensor(b.bn_var), dir / (prefix + ".bn_var.ika"));
}

EtBlock load_block(const fs::path& dir, const std::string& prefix, const json& meta) {
  EtBlock b;
  b.weight = to_matrix(load_tensor(dir / (prefix + ".weight.ika")));
  b.bias = to_vector(load_tensor(dir / (prefix + ".bias.ika")));
  b.bn_gamma = to_vector(load_tensor(dir / (prefix + ".bn_gamma.ika")));
  b.bn_beta = to_vector(load_tensor(dir / (prefix + ".bn_beta.ika")));
  b.bn_mean = to_vector(load_tensor(dir / (prefix + ".bn_mean.ika")));
  b.bn_var = to_vector(load_tensor(dir / (prefix + ".bn_var.ika")));
  b.bn_eps = meta.at("bn_eps").get<double>();
  b.bn_momentum = meta.at("bn_momentum").get<double>();
  b.use_tanh = meta.at("use_tanh").get<bool>();
  b.training_mode = false;
  const auto n = b.bias.size();
  if (b.weight.rows() != n || b.weight.cols() != n || b.bn_gamma.size() != n || b.bn_beta.size() != n ||
      b.bn_mean.size() != n || b.bn_var.size() != n)
    throw Error(ErrorCode::DimMismatch, "inconsistent ET tensors for '" + prefix + "' in " + dir.string());
  return b;
}

}  // namespace

CouplingCoder make_coder(Eigen::Index w, std::uint64_t seed, const CoderOptions& opts) {
  if (w <= 0 || w % 2 != 0) throw Error(ErrorCode::OddResolution, "coder resolution must be even");
  std::mt19937_64 rng(seed);
  const Eigen::Index half = w * w / 2;
  EtBlock f = make_block(half, rng, opts);
  EtBlock g = make_block(half, rng, opts);
  return CouplingCoder(w, std::move(f), std::move(g));
}

std::size_t expected_parameter_count(Eigen::Index w) {
  const auto half = static_cast<std::size_t>(w * w / 2);
  return 2 * (half * half + 3 * half);
}

void save_coder(const CouplingCoder& coder, const fs::path& dir) {
  fs::create_directories(dir);
  save_block(coder.f(), dir, "f");
  save_block(coder.g(), dir, "g");
  json meta = {
      {"w", coder.resolution()},
      {"units", coder.half()},
      {"bn_eps", coder.f().bn_eps},
      {"bn_momentum", coder.f().bn_momentum},
      {"use_tanh", coder.f().use_tanh},
  };
  std::ofstream out(dir / "coder.json");
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + (dir / "coder.json").string());
  out << meta.dump(2) << '\n';
}

CouplingCoder load_coder(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingDirectory, dir.string());
  std::ifstream in(dir / "coder.json");
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + (dir / "coder.json").string());
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, "bad coder.json: " + std::string(e.what()));
  }
  const auto w = meta.at("w").get<Eigen::Index>();
  return CouplingCoder(w, load_block(dir, "f", meta), load_block(dir, "g", meta));
}

}  // namespace koopgait
