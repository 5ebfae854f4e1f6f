#include "koopgait/flops.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "koopgait/error.hpp"

namespace koopgait::flops {

namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw Error(ErrorCode::BadSpec, "FLOPs count overflows 64 bits");
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::BadSpec, what);
}

LayerKind parse_kind(const std::string& s) {
  if (s == "conv2d") return LayerKind::Conv2d;
  if (s == "conv3d") return LayerKind::Conv3d;
  if (s == "dense") return LayerKind::Dense;
  throw Error(ErrorCode::BadSpec, "unknown layer kind '" + s + "'");
}

std::uint64_t count(const nlohmann::json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw Error(ErrorCode::BadSpec, std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Conv3d: return "conv3d";
    case LayerKind::Dense: return "dense";
  }
  return "unknown";
}

std::uint64_t layer_flops(const LayerSpec& s) {
  require(s.uses >= 1, "uses must be >= 1");
  std::uint64_t f = 0;
  switch (s.kind) {
    case LayerKind::Conv2d:
      require(s.c_in && s.c_out && s.n && s.width && s.height, "conv2d needs c_in, c_out, n, width, height > 0");
      f = mul(mul(mul(mul(mul(2, s.c_in), mul(s.n, s.n)), s.c_out), s.width), s.height);
      break;
    case LayerKind::Conv3d:
      require(s.c_in && s.c_out && s.n && s.width && s.height && s.time,
              "conv3d needs c_in, c_out, n, width, height, time > 0");
      f = mul(mul(mul(mul(mul(mul(2, s.c_in), mul(mul(s.n, s.n), s.n)), s.c_out), s.width), s.height), s.time);
      break;
    case LayerKind::Dense:
      require(s.i && s.o, "dense needs i, o > 0");
      f = mul(mul(2, s.i), s.o);
      break;
  }
  return mul(f, s.uses);
}

double fc_conv_ratio(std::uint64_t i, std::uint64_t o, std::uint64_t c_in, std::uint64_t c_out, std::uint64_t n,
                     std::uint64_t w_post, std::uint64_t h_post) {
  require(i && o && c_in && c_out && n && w_post && h_post, "all ratio arguments must be positive");
  const double fc = 2.0 * static_cast<double>(i) * static_cast<double>(o);
  const double conv = 2.0 * static_cast<double>(c_in) * static_cast<double>(n * n) * static_cast<double>(c_out) *
                      static_cast<double>(w_post) * static_cast<double>(h_post);
  return fc / conv;
}

double fl_score(double flops) {
  require(flops > 0.0 && std::isfinite(flops), "FLOPs must be positive");
  return 1e8 / flops;
}

CostReport model_cost(const std::vector<LayerSpec>& specs) {
  require(!specs.empty(), "model has no layers");
  CostReport r;
  for (const auto& s : specs) {
    const auto f = layer_flops(s);
    r.layers.push_back({s.name, s.kind, f});
    require(!__builtin_add_overflow(r.total, f, &r.total), "total FLOPs overflow 64 bits");
    if (s.kind == LayerKind::Dense)
      r.dense += f;
    else
      r.conv += f;
  }
  r.fl_score = fl_score(static_cast<double>(r.total));
  return r;
}

std::vector<LayerSpec> load_specs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadSpec, path.string() + ": " + e.what());
  }
  const auto& layers = doc.is_array() ? doc : doc.at("layers");
  std::vector<LayerSpec> specs;
  try {
    for (const auto& j : layers) {
      LayerSpec s;
      s.kind = parse_kind(j.at("kind").get<std::string>());
      s.name = j.value("name", to_string(s.kind) + "_" + std::to_string(specs.size()));
      s.c_in = count(j, "c_in", 0);
      s.c_out = count(j, "c_out", 0);
      s.n = count(j, "n", 0);
      s.width = count(j, "width", 0);
      s.height = count(j, "height", 0);
      s.time = count(j, "time", 0);
      s.i = count(j, "i", 0);
      s.o = count(j, "o", 0);
      s.uses = count(j, "uses", 1);
      specs.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadSpec, path.string() + ": " + e.what());
  }
  return specs;
}

std::string format_sig(double value, int digits) {
  if (value == 0.0) return "0";
  const int exponent = static_cast<int>(std::floor(std::log10(std::abs(value))));
  char buf[64];
  if (exponent >= -4 && exponent < 3) {
    const int decimals = std::max(0, digits - 1 - exponent);
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  } else {
    std::snprintf(buf, sizeof buf, "%.*e", digits - 1, value);
  }
  return buf;
}

void write_cost_csv(const CostReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "layer,kind,flops,gflops,share\n";
  const double total = static_cast<double>(report.total);
  for (const auto& l : report.layers)
    out << l.name << ',' << to_string(l.kind) << ',' << l.flops << ',' << static_cast<double>(l.flops) / 1e9 << ','
        << static_cast<double>(l.flops) / total << '\n';
  out << "dense,dense," << report.dense << ',' << static_cast<double>(report.dense) / 1e9 << ','
      << report.dense_share() << '\n';
  out << "conv,conv," << report.conv << ',' << static_cast<double>(report.conv) / 1e9 << ',' << report.conv_share()
      << '\n';
  out << "total,all," << report.total << ',' << report.gflops() << ",1\n";
  out << "fl_score,all,," << format_sig(report.fl_score, 3) << ",\n";
}

}  // namespace koopgait::flops
