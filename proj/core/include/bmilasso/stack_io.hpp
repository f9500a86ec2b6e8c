#pragma once

#include <string>
#include <vector>

#include "bmilasso/dataset.hpp"

namespace bmilasso {

// CSV formats
//
// Long format (one file): header ".imp,y,<covariate names>"; the .imp
// column holds the dataset index 1..D; every dataset must have the same
// row count. Numeric cells are written with 17 significant digits so that
// a write/read round trip is bit exact.
//
// Multi-file format: stem_1.csv ... stem_D.csv, each with header
// "y,<covariate names>".
//
// Mask format: header "<covariate names>", one row per observation,
// entries 0 (missing) or 1 (observed).

struct LoadResult {
  ImputedStack stack;
  std::vector<std::string> warnings;
};

// Loads a long-format file. Errors carry the file name and the 1-based
// line number of the offending cell. A single-imputation file (D = 1) is
// legal and adds a warning.
LoadResult load_stack_long(const std::string& path);

// Loads stem_1.csv .. stem_<count>.csv.
LoadResult load_stack_multi(const std::string& stem, int count);

void emit_stack_long(const ImputedStack& stack, const std::string& path);
void emit_stack_multi(const ImputedStack& stack, const std::string& stem);

// Data file plus mask file. Placeholder values at masked cells are
// ignored; the convention on write is 0.
IncompleteDataset load_incomplete(const std::string& data_path,
                                  const std::string& mask_path);
void emit_incomplete(const IncompleteDataset& data,
                     const std::string& data_path,
                     const std::string& mask_path);

// Shared low-level helpers (also used by report writers).
std::string format_double(double value);          // 17 significant digits
std::vector<std::vector<std::string>> read_csv(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace bmilasso
