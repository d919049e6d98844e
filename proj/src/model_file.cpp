#include "embedtree/model_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace embedtree {

namespace {

constexpr const char* kFormatTag = "EMBEDNN v1";

std::string render(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw DataError("model file: bad float '" + token + "' in " + context);
  }
  return v;
}

}  // namespace

void save_model(const std::vector<NamedMatrix>& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("save_model: cannot open '" + path + "' for writing");
  }
  out << kFormatTag << "\n";
  for (const NamedMatrix& p : params) {
    if (!all_finite(p.value)) {
      throw DataError("save_model: non-finite values in parameter '" + p.name + "'");
    }
    out << "param " << p.name << " " << p.value.rows() << " " << p.value.cols() << "\n";
    for (int i = 0; i < p.value.rows(); ++i) {
      for (int j = 0; j < p.value.cols(); ++j) {
        if (j > 0) {
          out << ' ';
        }
        out << render(p.value(i, j));
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) {
    throw DataError("save_model: write failed for '" + path + "'");
  }
}

std::vector<NamedMatrix> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("load_model: cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line) || line != kFormatTag) {
    throw DataError("load_model: '" + path + "': version mismatch, expected '" +
                    kFormatTag + "', got '" + line + "'");
  }
  std::vector<NamedMatrix> params;
  while (std::getline(in, line)) {
    if (line == "end") {
      return params;
    }
    std::istringstream header(line);
    std::string keyword, name;
    int rows = 0, cols = 0;
    if (!(header >> keyword >> name >> rows >> cols) || keyword != "param" ||
        rows <= 0 || cols <= 0) {
      throw DataError("load_model: '" + path + "': bad header line '" + line + "'");
    }
    DenseMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (!std::getline(in, line)) {
        throw DataError("load_model: '" + path + "': truncated in parameter '" +
                        name + "' at row " + std::to_string(i + 1));
      }
      std::istringstream row(line);
      std::string token;
      for (int j = 0; j < cols; ++j) {
        if (!(row >> token)) {
          throw DataError("load_model: '" + path + "': short row in parameter '" +
                          name + "' at row " + std::to_string(i + 1));
        }
        m(i, j) = parse_double(token, "parameter '" + name + "'");
      }
      if (row >> token) {
        throw DataError("load_model: '" + path + "': excess values in parameter '" +
                        name + "' at row " + std::to_string(i + 1));
      }
    }
    params.push_back({name, std::move(m)});
  }
  throw DataError("load_model: '" + path + "': missing 'end' line");
}

const DenseMatrix& find_param(const std::vector<NamedMatrix>& params,
                              const std::string& name) {
  for (const NamedMatrix& p : params) {
    if (p.name == name) {
      return p.value;
    }
  }
  throw DataError("model file: missing parameter '" + name + "'");
}

bool has_param(const std::vector<NamedMatrix>& params, const std::string& name) {
  for (const NamedMatrix& p : params) {
    if (p.name == name) {
      return true;
    }
  }
  return false;
}

}  // namespace embedtree
