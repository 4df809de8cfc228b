#include "aot/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace aot::io {

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double x = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), x);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw IoError("not a number: '" + std::string(text) + "'");
  }
  return x;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(std::string_view text) {
  std::vector<double> data;
  std::size_t rows = 0, cols = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text.remove_prefix(eol == std::string_view::npos ? text.size() : eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::size_t fields = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      try {
        data.push_back(parse_double(line.substr(0, comma)));
      } catch (const IoError& e) {
        throw IoError("CSV line " + std::to_string(line_no) + ": " + e.what());
      }
      ++fields;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) cols = fields;
    else if (fields != cols) {
      throw IoError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                    " fields, found " + std::to_string(fields));
    }
    ++rows;
  }
  if (rows == 0) throw IoError("CSV contains no rows");
  return Matrix::from_data(rows, cols, std::move(data));
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  write_text(path, matrix_to_csv(m));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  try {
    return matrix_from_csv(read_text(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

json matrix_to_json(const Matrix& m) {
  const auto d = m.data();
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(d.begin(), d.end())}};
}

Matrix matrix_from_json(const json& j) {
  try {
    const auto rows = j.at("rows").get<std::size_t>();
    const auto cols = j.at("cols").get<std::size_t>();
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) throw IoError("matrix JSON: data length does not match shape");
    return Matrix::from_data(rows, cols, std::move(data));
  } catch (const json::exception& e) {
    throw IoError(std::string("matrix JSON: ") + e.what());
  }
}

json versioned(std::string_view schema, json j) {
  j["schema"] = schema;
  j["version"] = std::to_string(kSchemaMajor) + "." + std::to_string(kSchemaMinor);
  return j;
}

void require_schema(const json& j, std::string_view schema) {
  if (!j.is_object() || !j.contains("schema") || !j.contains("version")) {
    throw IoError("document has no schema/version stamp");
  }
  if (j["schema"] != schema) {
    throw IoError("expected schema '" + std::string(schema) + "', found " + j["schema"].dump());
  }
  const auto version = j["version"].get<std::string>();
  int major = -1;
  const auto r = std::from_chars(version.data(), version.data() + version.size(), major);
  if (r.ec != std::errc{} || major != kSchemaMajor) {
    throw IoError("unsupported " + std::string(schema) + " version " + version);
  }
}

json snr_to_json(double snr) {
  if (std::isinf(snr) && snr > 0) return "inf";
  return snr;
}

double snr_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInfiniteSnr;
    throw IoError("bad SNR value " + j.dump());
  }
  return j.get<double>();
}

namespace {

json params_to_json(const TraceParams& p) {
  return {{"eta", p.eta},   {"phi", p.phi},     {"tau", p.tau},         {"temperature", p.temperature},
          {"causal", p.causal}, {"prenorm", p.prenorm}, {"delta", p.delta}, {"d", p.d},
          {"K", p.K},       {"p", p.p},         {"N", p.N},             {"seed", p.seed}};
}

TraceParams params_from_json(const json& j) {
  TraceParams p;
  p.eta = j.at("eta").get<double>();
  p.phi = j.at("phi").get<std::string>();
  p.tau = j.at("tau").get<double>();
  p.temperature = j.at("temperature").get<double>();
  p.causal = j.at("causal").get<bool>();
  p.prenorm = j.at("prenorm").get<bool>();
  p.delta = j.at("delta").get<double>();
  p.d = j.at("d").get<std::size_t>();
  p.K = j.at("K").get<std::size_t>();
  p.p = j.at("p").get<std::size_t>();
  p.N = j.at("N").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json trace_to_json(const DenoiseTrace& trace) {
  json snr = json::array();
  for (const auto& row : trace.snr) {
    json r = json::array();
    for (double v : row) r.push_back(snr_to_json(v));
    snr.push_back(std::move(r));
  }
  json pattern = json::array();
  for (bool b : trace.pattern) pattern.push_back(b);
  return versioned("aot.trace",
                   {{"params", params_to_json(trace.params)}, {"snr", snr}, {"pattern", pattern}});
}

DenoiseTrace trace_from_json(const json& j) {
  require_schema(j, "aot.trace");
  try {
    DenoiseTrace t;
    t.params = params_from_json(j.at("params"));
    for (const auto& row : j.at("snr")) {
      t.snr.emplace_back();
      for (const auto& v : row) t.snr.back().push_back(snr_from_json(v));
    }
    for (const auto& b : j.at("pattern")) t.pattern.push_back(b.get<bool>());
    return t;
  } catch (const json::exception& e) {
    throw IoError(std::string("trace JSON: ") + e.what());
  }
}

json lemma_report_to_json(const LemmaReport& r) {
  json results = json::array();
  for (const auto& x : r.results) {
    results.push_back({{"name", x.name},
                       {"trials", x.trials},
                       {"satisfied", x.satisfied},
                       {"frequency", x.frequency},
                       {"floor", x.floor},
                       {"slack", x.slack},
                       {"meets_floor", x.meets_floor}});
  }
  json conditions = json::array();
  for (const auto& c : r.conditions) conditions.push_back({{"name", c.name}, {"holds", c.holds}});
  return versioned("aot.lemma_report",
                   {{"lemma", r.lemma},
                    {"results", results},
                    {"conditions", conditions},
                    {"regime",
                     {{"N", r.N}, {"K", r.K}, {"p", r.p}, {"d", r.d}, {"delta", r.delta},
                      {"tau", r.tau}, {"theta", r.theta}, {"t", r.t}, {"log_base", r.log_base}}}});
}

json theorem_report_to_json(const TheoremReport& r) {
  return versioned("aot.theorem_report",
                   {{"pass", r.pass},
                    {"layers_held", r.layers_held},
                    {"held_prefix", r.held_prefix},
                    {"all_layers_held", r.all_layers_held},
                    {"pattern_frequency", r.pattern_frequency},
                    {"max_ratio_error", r.max_ratio_error},
                    {"prefix_closed_form_error", r.prefix_closed_form_error},
                    {"final_closed_form_error", finite_or_null(r.final_closed_form_error)},
                    {"trace", trace_to_json(r.trace)}});
}

json train_log_to_json(const TrainLog& log) {
  json steps = json::array();
  for (const auto& s : log.steps)
    steps.push_back({{"step", s.step}, {"loss", s.loss}, {"mean_final_snr", snr_to_json(s.mean_final_snr)}});
  return versioned("aot.train_log", {{"steps", steps},
                                     {"initial_mean_snr", snr_to_json(log.initial_mean_snr)},
                                     {"final_mean_snr", snr_to_json(log.final_mean_snr)},
                                     {"final_loss", log.final_loss},
                                     {"orthonormality", log.orthonormality}});
}

std::string snr_csv(const DenoiseTrace& trace) {
  std::string out = "layer,cluster,snr\n";
  for (std::size_t l = 0; l < trace.snr.size(); ++l) {
    for (std::size_t k = 0; k < trace.snr[l].size(); ++k) {
      const double v = trace.snr[l][k];
      out += std::to_string(l) + "," + std::to_string(k) + "," +
             (std::isinf(v) ? std::string("inf") : format_double(v)) + "\n";
    }
  }
  return out;
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace aot::io
