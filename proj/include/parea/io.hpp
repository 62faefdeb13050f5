// Artifact formats: field CSV, JSON sidecars, run-length encoded masks,
// solver traces and report summaries. Every JSON document carries
// "format_version": 1.
#pragma once

#include "parea/certify.hpp"
#include "parea/levelset.hpp"
#include "parea/oracle.hpp"
#include "parea/pdhg.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace parea {

using Json = nlohmann::ordered_json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;

/// Shortest decimal form that reads back to the same double.
std::string format_real(double v);

/// Run-length encoding of a bit vector: runs written as <count><symbol> with
/// '#' for set and '.' for clear bits, e.g. "3.5#2.".
std::string encode_rle(const std::vector<bool>& bits);
/// Inverse of encode_rle. Throws FormatError on bad syntax or when the
/// decoded length differs from expected_length.
std::vector<bool> decode_rle(const std::string& rle, std::size_t expected_length);

/// `x_index,y_index,value`, row-major over masked cells.
std::string field_csv(const ScalarField& u);
/// `x_index,y_index,value,value2`.
std::string field_csv(const VectorField& b);
/// `edge,x_index,y_index,direction,value` over boundary edges.
std::string trace_csv(const BoundaryTrace& t);
/// `iter,primal,dual,gap,r_div,r_trace`.
std::string solver_trace_csv(const std::vector<TracePoint>& trace);

/// Reads a scalar field written by field_csv (extra columns ignored).
ScalarField read_field_csv(const std::string& text, const GridPtr& grid);

/// nx, ny, h, mask RLE and the roles of the fields stored alongside.
Json grid_sidecar(const GridSpec& g, const std::vector<std::string>& roles);

Json field_json(const ScalarField& u);
Json field_json(const VectorField& b);
Json field_json(const BoundaryTrace& t);

Json to_json(const TheoremReport& r);
Json to_json(const Certificate& c, const SolverConfig& cfg);
Json to_json(const OracleReport& r, const OracleConfig& cfg);
Json to_json(const MinimalityVerdict& v);
Json to_json(const LscReport& r);
Json to_json(const PsiReport& r);
Json to_json(const ThresholdReport& r);
Json to_json(const ThresholdSearch& r);
Json to_json(const SolverConfig& cfg);
/// Bitmask over masked cells (RLE) plus lambda and member count.
Json to_json(const LevelSet& E);
/// Probe report with the minimizing W embedded as an RLE bitmask.
Json to_json(const BarrierReport& r, const Eigen::Vector2d& x0, double eps);

/// Versions of this library and its dependencies.
Json library_versions();

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);

/// Writes the text to path, replacing any existing file. Throws
/// std::runtime_error on I/O failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace parea
