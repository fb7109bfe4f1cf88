#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gridwatch/grid.hpp"

namespace gridwatch {

enum class FrameEncoding { csv, binary_f64_le_colmajor };

inline constexpr int kFrameSchemaVersion = 1;
inline constexpr int kGridSchemaVersion = 1;

/// Versioned JSON document for a GridSpec.
void write_grid(const GridSpec& grid, const std::filesystem::path& path);
GridSpec read_grid(const std::filesystem::path& path);

/// Writes a frame. CSV produces a single file with header row
/// `hour,<id1>,<id2>,...` and values at 17 significant digits. Binary
/// produces `<path>.gwf` (little-endian f64, column-major) plus
/// `<path>.gwf.json` carrying the header fields. Files land atomically:
/// content goes to a temp file first, then a rename. `provenance` entries
/// (config hash, seed, ...) are embedded in the binary header; the CSV
/// layout is fixed and cannot carry them.
void write_frame(const SeriesFrame& frame, const std::filesystem::path& path,
                 FrameEncoding encoding, const std::string& grid_name = "",
                 const std::map<std::string, std::string>& provenance = {});

/// Reads a frame written by write_frame. Paths ending in `.gwf` are read as
/// binary, everything else as CSV. Truncated payloads raise CorruptFileError
/// with the offending byte offset; unknown schema versions are rejected.
SeriesFrame read_frame(const std::filesystem::path& path);

/// Per-hour anomaly labels for one plant, aligned with a frame.
struct LabelSeries {
  std::string plant_id;
  std::int64_t start_index = 0;
  std::vector<std::uint8_t> labels;  // one entry per hour, 0 or 1
};

/// Labels CSV: `hour,plant_id,label`, one row per hour.
void write_labels(const LabelSeries& labels, const std::filesystem::path& path);
LabelSeries read_labels(const std::filesystem::path& path);

/// Ingests an externally produced CSV (one column per bus/plant, one row per
/// hour). `mapping` renames grid column ids to source column names; grid ids
/// missing from the mapping are looked up under their own name. The result is
/// reordered to grid column order and validated; any violation is an error,
/// never a silent repair.
SeriesFrame import_external(const std::filesystem::path& path,
                            const std::map<std::string, std::string>& mapping,
                            const GridSpec& grid);

/// Atomically replaces `path` with `content` (temp file + rename).
void atomic_write_text(const std::filesystem::path& path, const std::string& content);

std::string read_text(const std::filesystem::path& path);

}  // namespace gridwatch
