#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "embedtree/matrix.hpp"

namespace embedtree {

// Raised for unreadable, truncated or wrong-format model/corpus files. The
// CLI maps it to its data-error exit code.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NamedMatrix {
  std::string name;
  DenseMatrix value;
};

// Text checkpoint format, byte-exact by construction:
//   line 1:       EMBEDNN v1
//   per param:    param <name> <rows> <cols>
//                 <rows> lines of <cols> floats, 17 significant digits
//   last line:    end
// Values are written with std::to_chars (locale-independent) and 17
// significant digits, which round-trips every finite f64 exactly.
void save_model(const std::vector<NamedMatrix>& params, const std::string& path);
std::vector<NamedMatrix> load_model(const std::string& path);

// Lookup helper for loaders; throws DataError naming the parameter.
const DenseMatrix& find_param(const std::vector<NamedMatrix>& params,
                              const std::string& name);
bool has_param(const std::vector<NamedMatrix>& params, const std::string& name);

}  // namespace embedtree
