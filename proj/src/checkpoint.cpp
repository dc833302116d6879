#include "simcom/errors.hpp"
#include "simcom/nn.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace simcom {

namespace {
constexpr const char* kMagic = "simcom-checkpoint";
constexpr int kVersion = 1;
}  // namespace

// Layout:
//   simcom-checkpoint 1 <count>
//   <name> <rows> <cols>
//   <row-major values, one row per line>
void save_checkpoint(const std::string& path, std::span<const Parameter* const> params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path);
  out << kMagic << ' ' << kVersion << ' ' << params.size() << '\n';
  out << std::setprecision(17);
  for (const Parameter* p : params) {
    out << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) out << (j ? " " : "") << p->value(i, j);
      out << '\n';
    }
  }
  if (!out) throw Error("failed writing checkpoint " + path);
}

void load_checkpoint(const std::string& path, std::span<Parameter* const> params) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path);
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version >> count) || magic != kMagic || version != kVersion)
    throw ParseError(1, "not a version-1 checkpoint: " + path);

  std::map<std::string, Tensor> stored;
  for (std::size_t n = 0; n < count; ++n) {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    if (!(in >> name >> rows >> cols) || rows < 0 || cols < 0)
      throw ParseError(n + 2, "bad tensor header in " + path);
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j)
        if (!(in >> t(i, j))) throw ParseError(n + 2, "truncated tensor " + name);
    stored.emplace(std::move(name), std::move(t));
  }

  for (Parameter* p : params) {
    auto it = stored.find(p->name);
    if (it == stored.end()) throw Error("checkpoint lacks parameter " + p->name);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw ShapeError("checkpoint shape mismatch for " + p->name);
    p->value = it->second;
    p->zero_grad();
  }
}

}  // namespace simcom
