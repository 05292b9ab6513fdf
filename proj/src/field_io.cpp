#include "cpprop/field_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "cpprop/errors.hpp"

namespace cpprop {

namespace {

static_assert(std::endian::native == std::endian::little,
              "field dumps are written in native order, which must be little-endian");

constexpr std::array<char, 8> kMagic{'C', 'P', 'P', 'R', 'O', 'P', 'F', 'G'};

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw IoError(fmt::format("{}: truncated field dump", path));
  }
  return v;
}

}  // namespace

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

void write_field_grid(const std::string& path, const FieldGrid& grid, const nlohmann::json& meta) {
  if (grid.field.size() != grid.n_rows() * grid.n_samples) {
    throw ConfigError("write_field_grid: field size does not match the grid");
  }
  nlohmann::json header;
  header["n_rows"] = grid.n_rows();
  header["n_samples"] = grid.n_samples;
  header["tau0"] = grid.tau0;
  header["dt"] = grid.dt;
  header["z_values"] = grid.z_values;
  header["units"] = {{"tau", "T"}, {"z", "alpha z"}, {"field", "Rabi frequency, 1/T"}};
  header["meta"] = meta;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path));
  out.write(kMagic.data(), kMagic.size());
  put(out, kFieldFormatVersion);
  put(out, static_cast<std::uint32_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(grid.field.data()),
            static_cast<std::streamsize>(grid.field.size() * sizeof(cplx)));
  if (!out) throw IoError(fmt::format("write to {} failed", path));
}

FieldFile read_field_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path));
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError(fmt::format("{}: not a field dump (bad magic)", path));
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kFieldFormatVersion) {
    throw IoError(fmt::format("{}: unsupported field dump version {}", path, version));
  }
  const auto len = get<std::uint32_t>(in, path);
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw IoError(fmt::format("{}: truncated header", path));

  FieldFile file;
  try {
    file.header = nlohmann::json::parse(text);
    FieldGrid& g = file.grid;
    g.n_samples = file.header.at("n_samples").get<std::size_t>();
    g.tau0 = file.header.at("tau0").get<double>();
    g.dt = file.header.at("dt").get<double>();
    g.z_values = file.header.at("z_values").get<std::vector<double>>();
    if (file.header.at("n_rows").get<std::size_t>() != g.z_values.size()) {
      throw IoError(fmt::format("{}: n_rows does not match z_values", path));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("{}: bad header: {}", path, e.what()));
  }
  FieldGrid& g = file.grid;
  g.field.resize(g.z_values.size() * g.n_samples);
  if (!in.read(reinterpret_cast<char*>(g.field.data()),
               static_cast<std::streamsize>(g.field.size() * sizeof(cplx)))) {
    throw IoError(fmt::format("{}: truncated payload", path));
  }
  return file;
}

}  // namespace cpprop
