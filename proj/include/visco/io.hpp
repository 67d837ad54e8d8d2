#pragma once

// Output files: VWF1 field snapshots, energy traces, PGM slices, and the
// SHA-256 manifest written after every command.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "visco/grid.hpp"
#include "visco/solver.hpp"

namespace visco {

/// I/O failure; what() names the path.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A snapshot file: "VWF1", u32 version, u32 dim, u32 node count per axis,
/// f64 spacing, f64 time, u32 field count, then each field as row-major f64,
/// all little-endian.
struct VwfFile {
  static constexpr std::uint32_t version = 1;
  int dim = 2;
  std::array<std::uint32_t, 3> shape{1, 1, 1};
  double spacing = 1.0;
  double time = 0.0;
  std::vector<Field> fields;

  std::size_t nodes() const;
  friend bool operator==(const VwfFile&, const VwfFile&) = default;
};

VwfFile make_vwf(const Grid& g, double t, std::vector<Field> fields);
std::string encode_vwf(const VwfFile& f);
/// Throws IoError on a bad magic, version, or truncated payload.
VwfFile decode_vwf(const std::string& bytes);

/// "t,E_total,E_cone,dissipation" rows; NaN cone energies are written as "nan".
std::string energy_csv(const std::vector<EnergySample>& trace);

/// Binary 8-bit PGM of a 2D field, or of the middle z-slice of a 3D one,
/// scaled linearly from min to max. NaN maps to 0.
std::string pgm_slice(const Grid& g, const Field& f);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

/// Writes to a sibling temporary file and renames it over `path`. Creates parent directories.
void write_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

struct Artifact {
  std::string name;  ///< path relative to the output directory, '/'-separated
  std::string bytes;
};

struct ManifestEntry {
  std::string name;
  std::string sha256;
  std::size_t size = 0;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;  ///< sorted by name
  /// One "<sha256>  <size>  <name>" line per entry.
  std::string to_text() const;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline constexpr const char* manifest_name = "MANIFEST";

/// Writes every artifact atomically, then the manifest. Duplicate or unsafe
/// names (absolute, "..", or the manifest's own) throw std::invalid_argument.
Manifest write_outputs(const std::vector<Artifact>& artifacts, const std::filesystem::path& dir);

}  // namespace visco
