#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wsgat/errors.hpp"
#include "wsgat/model.hpp"

namespace wsgat {
namespace {

constexpr const char* kMagic = "wsgat-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& token, const std::filesystem::path& path) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    throw IoError(path.string() + ": bad number '" + token + "'");
  }
  return v;
}

template <typename T>
T expect_field(std::istream& in, const std::string& key, const std::filesystem::path& path) {
  std::string name;
  T value{};
  if (!(in >> name >> value) || name != key) {
    throw IoError(path.string() + ": expected field '" + key + "'");
  }
  return value;
}

}  // namespace

void save_checkpoint(const GatModel& model, const std::filesystem::path& path) {
  std::ostringstream out;
  const GatConfig& c = model.config;
  out << kMagic << ' ' << kVersion << '\n'
      << "in_dim " << c.in_dim << '\n'
      << "hidden_dim " << c.hidden_dim << '\n'
      << "num_heads " << c.num_heads << '\n'
      << "out_hidden " << c.out_hidden << '\n'
      << "num_classes " << c.num_classes << '\n'
      << "leaky_slope " << hex(c.leaky_slope) << '\n'
      << "dropout_p " << hex(c.dropout_p) << '\n'
      << "add_self_loops " << (c.add_self_loops ? 1 : 0) << '\n';
  const auto names = model.parameter_names();
  const auto blocks = model.parameters();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Matrix& m = *blocks[b];
    out << "block " << names[b] << ' ' << m.rows << ' ' << m.cols << '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
      for (std::size_t col = 0; col < m.cols; ++col) out << (col ? " " : "") << hex(m(r, col));
      out << '\n';
    }
  }
  out << "end\n";

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write checkpoint " + path.string());
  file << out.str();
  if (!file) throw IoError("failed writing checkpoint " + path.string());
}

GatModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw IoError(path.string() + ": not a wsgat checkpoint");
  if (version != kVersion) {
    throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  GatConfig c;
  c.in_dim = expect_field<std::size_t>(in, "in_dim", path);
  c.hidden_dim = expect_field<std::size_t>(in, "hidden_dim", path);
  c.num_heads = expect_field<std::size_t>(in, "num_heads", path);
  c.out_hidden = expect_field<std::size_t>(in, "out_hidden", path);
  c.num_classes = expect_field<std::size_t>(in, "num_classes", path);
  c.leaky_slope = parse_hex(expect_field<std::string>(in, "leaky_slope", path), path);
  c.dropout_p = parse_hex(expect_field<std::string>(in, "dropout_p", path), path);
  c.add_self_loops = expect_field<int>(in, "add_self_loops", path) != 0;
  c.validate();

  // Shapes come from the config; the stored headers must agree.
  GatModel model = init_params(c, 0);
  const auto names = model.parameter_names();
  auto blocks = model.parameters();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    std::string tag, name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> tag >> name >> rows >> cols) || tag != "block" || name != names[b]) {
      throw IoError(path.string() + ": expected block " + names[b]);
    }
    Matrix& m = *blocks[b];
    if (rows != m.rows || cols != m.cols) {
      throw IoError(path.string() + ": block " + name + " has shape (" + std::to_string(rows) + "x" +
                    std::to_string(cols) + "), expected " + m.shape_string());
    }
    for (double& v : m.data) {
      std::string token;
      if (!(in >> token)) throw IoError(path.string() + ": truncated block " + name);
      v = parse_hex(token, path);
    }
  }
  std::string end;
  if (!(in >> end) || end != "end") throw IoError(path.string() + ": missing end marker");
  return model;
}

}  // namespace wsgat
