#include "allreduce/reference.hpp"

#include <array>

namespace allreduce {

namespace {

const std::array<ReferenceRow, 9> kRows = {{
    {"B1", 15, 18, 144, 16.8, 18.0, 10.2},
    {"B2", 24, 32, 240, 31.8, 64.0, 20.8},
    {"B3", 35, 50, 1200, 51.6, 150.0, 34.7},
    {"D1", 25, 30, 380, 30.0, 47.1, 23.2},
    {"D2", 36, 45, 870, 48.4, 75.9, 33.8},
    {"D3", 49, 63, 1722, 71.2, 112.3, 48.0},
    {"J1", 20, 30, 180, 23.0, 40.0, 22.7},
    {"J2", 30, 45, 420, 36.0, 69.6, 39.9},
    {"J3", 40, 59, 760, 51.2, 80.0, 62.2},
}};

}  // namespace

std::optional<ReferenceRow> reference_row(const std::string& label) {
  for (const ReferenceRow& r : kRows) {
    if (r.label == label) return r;
  }
  return std::nullopt;
}

std::string preset_label_for(const TopologyParams& params) {
  for (const Preset& p : table_presets()) {
    if (p.params == params) return p.label;
  }
  return "";
}

}  // namespace allreduce
