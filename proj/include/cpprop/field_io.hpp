#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "cpprop/mb_engine.hpp"

namespace cpprop {

/// Field dump layout (all integers and floats little-endian):
///
///   offset 0   8 bytes   magic "CPPROPFG"
///   offset 8   uint32    format version (1)
///   offset 12  uint32    header length L in bytes
///   offset 16  L bytes   UTF-8 JSON header
///   then       n_rows * n_samples * 2 float64, row-major by depth, each
///              sample as (real, imaginary)
///
/// Header keys: "n_rows", "n_samples", "tau0", "dt", "z_values",
/// "units" (tau in units of T, z as optical depth alpha z, field as Rabi
/// frequency in units of 1/T) and whatever the caller adds under "meta".
inline constexpr std::uint32_t kFieldFormatVersion = 1;

void write_field_grid(const std::string& path, const FieldGrid& grid,
                      const nlohmann::json& meta = nlohmann::json::object());

struct FieldFile {
  FieldGrid grid;
  nlohmann::json header;
};

FieldFile read_field_grid(const std::string& path);

/// 64-bit FNV-1a, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace cpprop
