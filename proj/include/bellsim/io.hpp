// Copyright 2026 The bellsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Plot-ready curve output.
//
// CSV layout:
//
//   # bellsim <scenario>
//   # config_hash: <16 hex digits>
//   # seed: <u64>
//   # engine: analytic|montecarlo
//   # calibration: mu_max_same_source=<v> mu_max_independent=<v>
//   # <extra key>: <value>        (zero or more)
//   # config: <resolved run config as one-line JSON>
//   setting,counts,sigma,model_fit
//   <rows>
//
// Numbers use '.' as decimal separator and 17 significant digits; lines end
// in '\n'. The JSON format carries the same header fields and rows.

#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace bellsim {

enum class OutputFormat { kCsv, kJson };

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double x) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(17) << x;
  return os.str();
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

struct OutputHeader {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string engine;
  double mu_max_same_source = 0.0;
  double mu_max_independent = 0.0;
  std::vector<std::pair<std::string, std::string>> extra;
  std::string config_json;  // one line
};

struct EmittedPoint {
  double setting = 0.0;
  double counts = 0.0;
  double sigma = 0.0;
  double model_fit = 0.0;
};

inline std::string format_header_csv(const OutputHeader& h) {
  std::string out;
  out += "# bellsim " + h.scenario + "\n";
  out += "# config_hash: " + h.config_hash + "\n";
  out += "# seed: " + std::to_string(h.seed) + "\n";
  out += "# engine: " + h.engine + "\n";
  out += "# calibration: mu_max_same_source=" + format_double(h.mu_max_same_source) +
         " mu_max_independent=" + format_double(h.mu_max_independent) + "\n";
  for (const auto& [k, v] : h.extra) out += "# " + k + ": " + v + "\n";
  out += "# config: " + h.config_json + "\n";
  return out;
}

inline nlohmann::ordered_json header_json(const OutputHeader& h) {
  nlohmann::ordered_json j;
  j["scenario"] = h.scenario;
  j["config_hash"] = h.config_hash;
  j["seed"] = h.seed;
  j["engine"] = h.engine;
  j["calibration"] = {{"mu_max_same_source", h.mu_max_same_source},
                      {"mu_max_independent", h.mu_max_independent}};
  for (const auto& [k, v] : h.extra) j["extra"][k] = v;
  j["config"] = nlohmann::json::parse(h.config_json);
  return j;
}

inline std::string format_curve(const std::vector<EmittedPoint>& points, OutputFormat format,
                                const OutputHeader& header) {
  if (points.empty()) throw OutputError("refusing to emit an empty curve");
  if (format == OutputFormat::kJson) {
    nlohmann::ordered_json j;
    j["header"] = header_json(header);
    j["columns"] = {"setting", "counts", "sigma", "model_fit"};
    j["points"] = nlohmann::ordered_json::array();
    for (const auto& p : points) {
      j["points"].push_back(
          {{"setting", p.setting}, {"counts", p.counts}, {"sigma", p.sigma}, {"model_fit", p.model_fit}});
    }
    return j.dump(2) + "\n";
  }
  std::string out = format_header_csv(header);
  out += "setting,counts,sigma,model_fit\n";
  for (const auto& p : points) {
    out += format_double(p.setting) + "," + format_double(p.counts) + "," + format_double(p.sigma) +
           "," + format_double(p.model_fit) + "\n";
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw OutputError("cannot open output file: " + path);
  f << text;
  if (!f) throw OutputError("failed writing output file: " + path);
}

inline void emit_curve(const std::vector<EmittedPoint>& points, OutputFormat format,
                       const std::string& path, const OutputHeader& header) {
  write_text_file(path, format_curve(points, format, header));
}

}  // namespace bellsim
