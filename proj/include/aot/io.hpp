#pragma once

// Serialization of matrices, traces and reports.
//
// Matrix CSV is row-major with no header. Structured documents are JSON
// objects carrying {"schema": name, "version": "MAJOR.MINOR"}; readers accept
// any minor revision of the major version they know and reject the rest.
// Infinite SNR values are written as the string "inf".

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "aot/lemmas.hpp"
#include "aot/train.hpp"
#include "aot/verify.hpp"

namespace aot::io {

using nlohmann::json;

inline constexpr int kSchemaMajor = 1;
inline constexpr int kSchemaMinor = 0;

std::string format_double(double x);
double parse_double(std::string_view text);

std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(std::string_view text);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);

/// Stamps {"schema", "version"} into `j`.
json versioned(std::string_view schema, json j = json::object());
/// Throws IoError if `j` is not `schema` or has an unknown major version.
void require_schema(const json& j, std::string_view schema);

json snr_to_json(double snr);
double snr_from_json(const json& j);

json trace_to_json(const DenoiseTrace& trace);
DenoiseTrace trace_from_json(const json& j);

json lemma_report_to_json(const LemmaReport& report);
json theorem_report_to_json(const TheoremReport& report);
json train_log_to_json(const TrainLog& log);

/// layer,cluster,snr rows with a header line.
std::string snr_csv(const DenoiseTrace& trace);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace aot::io
