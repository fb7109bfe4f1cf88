#include "gridwatch/dataio.hpp"

#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gridwatch/errors.hpp"

namespace gridwatch {

using nlohmann::json;

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

void check_writable_target(const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    throw DataError("refusing to write to directory path: " + path.string());
  }
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::exists(parent, ec)) {
    throw DataError("parent directory does not exist: " + parent.string());
  }
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw DataError("unparsable value '" + cell + "' at row " + std::to_string(row) +
                    ", column '" + col + "'");
  }
  if (!std::isfinite(v)) {
    throw DataError("non-finite value at row " + std::to_string(row) + ", column '" + col + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_binary_path(const std::filesystem::path& path) {
  return path.extension() == ".gwf";
}

SeriesFrame read_frame_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open frame file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw CorruptFileError("empty frame file: " + path.string(), 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  if (header.empty() || header[0] != "hour") {
    throw DataError("frame CSV must start with a 'hour' header column: " + path.string());
  }

  SeriesFrame frame;
  frame.columns.assign(header.begin() + 1, header.end());
  const std::size_t ncols = frame.columns.size();
  if (ncols == 0) throw DataError("frame CSV has no value columns: " + path.string());

  std::vector<double> data;
  std::int64_t first_hour = 0;
  std::int64_t expected_hour = 0;
  std::size_t nrows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != ncols + 1) {
      throw CorruptFileError("row " + std::to_string(nrows) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(ncols + 1),
                             nrows);
    }
    const std::int64_t hour = static_cast<std::int64_t>(parse_cell(cells[0], nrows, "hour"));
    if (nrows == 0) {
      first_hour = hour;
      expected_hour = hour;
    }
    if (hour != expected_hour) {
      throw DataError("non-contiguous hour index at row " + std::to_string(nrows));
    }
    ++expected_hour;
    for (std::size_t c = 0; c < ncols; ++c) {
      data.push_back(parse_cell(cells[c + 1], nrows, frame.columns[c]));
    }
    ++nrows;
  }
  if (nrows == 0) throw CorruptFileError("frame CSV has a header but no rows", 0);

  frame.start_index = first_hour;
  frame.values.resize(static_cast<std::int64_t>(nrows), static_cast<std::int64_t>(ncols));
  for (std::size_t r = 0; r < nrows; ++r) {
    for (std::size_t c = 0; c < ncols; ++c) {
      frame.values(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c)) = data[r * ncols + c];
    }
  }
  return frame;
}

SeriesFrame read_frame_binary(const std::filesystem::path& path) {
  const auto header_path = std::filesystem::path(path.string() + ".json");
  std::ifstream hin(header_path);
  if (!hin) throw DataError("missing frame header: " + header_path.string());
  json h;
  try {
    hin >> h;
  } catch (const json::exception& e) {
    throw DataError("malformed frame header " + header_path.string() + ": " + e.what());
  }
  const int version = h.value("schema_version", -1);
  if (version != kFrameSchemaVersion) {
    throw DataError("unsupported frame schema_version " + std::to_string(version) +
                    " in " + header_path.string());
  }
  if (h.value("encoding", "") != "binary_f64_le_colmajor") {
    throw DataError("unexpected encoding in header: " + header_path.string());
  }

  SeriesFrame frame;
  frame.start_index = h.at("start_index").get<std::int64_t>();
  frame.columns = h.at("columns").get<std::vector<std::string>>();
  const auto rows = h.at("rows").get<std::int64_t>();
  const auto cols = static_cast<std::int64_t>(frame.columns.size());
  if (rows < 1 || cols < 1) throw DataError("degenerate frame dimensions in header");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open frame payload: " + path.string());
  const std::size_t expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * sizeof(double);
  std::vector<char> payload(expected);
  in.read(payload.data(), static_cast<std::streamsize>(expected));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != expected) {
    throw CorruptFileError("truncated frame payload " + path.string() + ": got " +
                               std::to_string(got) + " bytes, expected " + std::to_string(expected),
                           got);
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw CorruptFileError("frame payload longer than header declares: " + path.string(), expected);
  }

  static_assert(std::endian::native == std::endian::little, "payload format is little-endian");
  frame.values.resize(rows, cols);
  std::memcpy(frame.values.data(), payload.data(), expected);  // Eigen default is column-major
  for (std::int64_t c = 0; c < cols; ++c) {
    for (std::int64_t r = 0; r < rows; ++r) {
      if (!std::isfinite(frame.values(r, c))) {
        throw DataError("non-finite value at row " + std::to_string(r) + ", column '" +
                        frame.columns[static_cast<std::size_t>(c)] + "' in " + path.string());
      }
    }
  }
  return frame;
}

}  // namespace

void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
  check_writable_target(path);
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("write failed (disk full?): " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_grid(const GridSpec& grid, const std::filesystem::path& path) {
  grid.validate();
  json doc;
  doc["schema_version"] = kGridSchemaVersion;
  doc["name"] = grid.name;
  doc["load_bus_ids"] = grid.load_bus_ids;
  doc["hours_per_year"] = grid.hours_per_year;
  doc["plants"] = json::array();
  for (const auto& p : grid.plants) {
    doc["plants"].push_back({{"id", p.id},
                             {"kind", to_string(p.kind)},
                             {"rated_power", p.rated_power},
                             {"annual_energy", p.annual_energy},
                             {"bus_id", p.bus_id}});
  }
  atomic_write_text(path, doc.dump(2) + "\n");
}

GridSpec read_grid(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw DataError("malformed grid file " + path.string() + ": " + e.what());
  }
  const int version = doc.value("schema_version", -1);
  if (version != kGridSchemaVersion) {
    throw DataError("unsupported grid schema_version " + std::to_string(version));
  }
  GridSpec grid;
  try {
    grid.name = doc.at("name").get<std::string>();
    grid.load_bus_ids = doc.at("load_bus_ids").get<std::vector<std::string>>();
    grid.hours_per_year = doc.value("hours_per_year", kHoursPerYear);
    for (const auto& pj : doc.at("plants")) {
      Plant p;
      p.id = pj.at("id").get<std::string>();
      p.kind = plant_kind_from_string(pj.at("kind").get<std::string>());
      p.rated_power = pj.at("rated_power").get<double>();
      p.annual_energy = pj.at("annual_energy").get<double>();
      p.bus_id = pj.value("bus_id", std::string{});
      grid.plants.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw DataError("grid file " + path.string() + " missing fields: " + e.what());
  }
  grid.validate();
  return grid;
}

void write_frame(const SeriesFrame& frame, const std::filesystem::path& path,
                 FrameEncoding encoding, const std::string& grid_name,
                 const std::map<std::string, std::string>& provenance) {
  if (frame.rows() < 1 || frame.cols() < 1) {
    throw DataError("refusing to write an empty frame");
  }
  if (frame.values.cols() != static_cast<std::int64_t>(frame.columns.size())) {
    throw FrameStructureError("frame value width does not match column ids");
  }

  if (encoding == FrameEncoding::csv) {
    std::string out;
    out.reserve(static_cast<std::size_t>(frame.rows()) * frame.columns.size() * 12);
    out += "hour";
    for (const auto& c : frame.columns) {
      out += ',';
      out += c;
    }
    out += '\n';
    for (std::int64_t r = 0; r < frame.rows(); ++r) {
      out += std::to_string(frame.start_index + r);
      for (std::int64_t c = 0; c < frame.cols(); ++c) {
        out += ',';
        out += format_value(frame.values(r, c));
      }
      out += '\n';
    }
    atomic_write_text(path, out);
    return;
  }

  auto payload_path = path;
  if (!is_binary_path(payload_path)) payload_path += ".gwf";
  check_writable_target(payload_path);

  json header;
  header["schema_version"] = kFrameSchemaVersion;
  header["grid_name"] = grid_name;
  header["start_index"] = frame.start_index;
  header["columns"] = frame.columns;
  header["encoding"] = "binary_f64_le_colmajor";
  header["rows"] = frame.rows();
  if (!provenance.empty()) header["provenance"] = provenance;

  const auto tmp = temp_sibling(payload_path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out.write(reinterpret_cast<const char*>(frame.values.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(frame.values.size())));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("write failed (disk full?): " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, payload_path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
  atomic_write_text(std::filesystem::path(payload_path.string() + ".json"), header.dump(2) + "\n");
}

SeriesFrame read_frame(const std::filesystem::path& path) {
  if (is_binary_path(path)) return read_frame_binary(path);
  const auto with_ext = std::filesystem::path(path.string() + ".gwf");
  if (!std::filesystem::exists(path) && std::filesystem::exists(with_ext)) {
    return read_frame_binary(with_ext);
  }
  return read_frame_csv(path);
}

void write_labels(const LabelSeries& labels, const std::filesystem::path& path) {
  if (labels.labels.empty()) throw DataError("refusing to write empty labels");
  std::string out = "hour,plant_id,label\n";
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    out += std::to_string(labels.start_index + static_cast<std::int64_t>(i));
    out += ',';
    out += labels.plant_id;
    out += ',';
    out += labels.labels[i] ? '1' : '0';
    out += '\n';
  }
  atomic_write_text(path, out);
}

LabelSeries read_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CorruptFileError("empty labels file", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "hour,plant_id,label") {
    throw DataError("labels CSV must start with 'hour,plant_id,label': " + path.string());
  }
  LabelSeries out;
  std::size_t row = 0;
  std::int64_t expected_hour = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 3) throw CorruptFileError("labels row " + std::to_string(row) + " malformed", row);
    const auto hour = static_cast<std::int64_t>(parse_cell(cells[0], row, "hour"));
    if (row == 0) {
      out.start_index = hour;
      out.plant_id = cells[1];
      expected_hour = hour;
    }
    if (hour != expected_hour) throw DataError("non-contiguous hour in labels at row " + std::to_string(row));
    if (cells[1] != out.plant_id) throw DataError("labels file mixes plant ids at row " + std::to_string(row));
    if (cells[2] != "0" && cells[2] != "1") {
      throw DataError("label must be 0 or 1 at row " + std::to_string(row));
    }
    out.labels.push_back(cells[2] == "1" ? 1 : 0);
    ++expected_hour;
    ++row;
  }
  if (out.labels.empty()) throw CorruptFileError("labels file has a header but no rows", 0);
  return out;
}

SeriesFrame import_external(const std::filesystem::path& path,
                            const std::map<std::string, std::string>& mapping,
                            const GridSpec& grid) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open import source: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CorruptFileError("empty import source", 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);

  std::map<std::string, std::size_t> source_index;
  for (std::size_t i = 0; i < header.size(); ++i) source_index[header[i]] = i;

  const auto wanted = grid.column_ids();
  std::vector<std::size_t> pick(wanted.size());
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    const auto it = mapping.find(wanted[i]);
    const std::string source_name = it == mapping.end() ? wanted[i] : it->second;
    const auto found = source_index.find(source_name);
    if (found == source_index.end()) {
      throw DataError("import source is missing a column for grid id '" + wanted[i] +
                      "' (looked for '" + source_name + "')");
    }
    pick[i] = found->second;
  }
  const auto hour_col = source_index.find("hour");

  std::vector<double> data;
  std::int64_t start_index = 0;
  std::size_t nrows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw CorruptFileError("import row " + std::to_string(nrows) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(header.size()),
                             nrows);
    }
    if (nrows == 0 && hour_col != source_index.end()) {
      start_index = static_cast<std::int64_t>(parse_cell(cells[hour_col->second], 0, "hour"));
    }
    for (std::size_t i = 0; i < wanted.size(); ++i) {
      data.push_back(parse_cell(cells[pick[i]], nrows, wanted[i]));
    }
    ++nrows;
  }
  if (nrows == 0) throw CorruptFileError("import source has a header but no rows", 0);

  SeriesFrame frame;
  frame.start_index = start_index;
  frame.columns = wanted;
  frame.values.resize(static_cast<std::int64_t>(nrows), static_cast<std::int64_t>(wanted.size()));
  for (std::size_t r = 0; r < nrows; ++r) {
    for (std::size_t c = 0; c < wanted.size(); ++c) {
      frame.values(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c)) = data[r * wanted.size() + c];
    }
  }

  const auto report = validate_frame(frame, grid);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw DataError("imported frame violates grid invariants: " + v.kind + " at column '" +
                    v.column + "', step " + std::to_string(v.step) + " (" +
                    std::to_string(report.violations.size()) + " violation(s) total)");
  }
  return frame;
}

}  // namespace gridwatch
