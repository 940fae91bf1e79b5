// Copyright 2026 The clipfilter Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clipfilter/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

namespace clipfilter {

using ordered_json = nlohmann::ordered_json;

double report_round(double value) {
  if (!std::isfinite(value)) return value;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

namespace {

ordered_json rounded(const std::vector<double>& values) {
  ordered_json out = ordered_json::array();
  for (double v : values) out.push_back(report_round(v));
  return out;
}

ordered_json report_json(const RunReport& report) {
  ordered_json doc;
  ordered_json echo = ordered_json::object();
  for (const auto& [key, value] : report.config_echo) echo[key] = ordered_json::parse(value);
  doc["config_echo"] = std::move(echo);
  doc["samples"] = ordered_json::array();
  for (const auto& s : report.samples) {
    ordered_json js;
    js["id"] = s.id;
    js["top_words"] = ordered_json::array();
    for (const auto& [index, score] : s.top_words) {
      js["top_words"].push_back({{"index", index}, {"score", report_round(score)}});
    }
    js["saliency"] = rounded(s.saliency);
    js["trace_norms"] = rounded(s.trace_norms);
    doc["samples"].push_back(std::move(js));
  }
  doc["losses"] = {{"l_qv", report_round(report.losses.l_qv)},
                   {"l_qc", report_round(report.losses.l_qc)},
                   {"l_cc", report_round(report.losses.l_cc)},
                   {"l_ma", report_round(report.losses.l_ma)}};
  doc["warnings"] = report.warnings;
  return doc;
}

void expect_keys(const ordered_json& obj, const std::set<std::string>& keys, const std::string& where) {
  if (!obj.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [k, _] : obj.items()) {
    if (!keys.count(k)) throw std::invalid_argument(where + ": unknown key '" + k + "'");
  }
  for (const auto& k : keys) {
    if (!obj.contains(k)) throw std::invalid_argument(where + ": missing key '" + k + "'");
  }
}

}  // namespace

std::string serialize_report(const RunReport& report) { return report_json(report).dump(2) + "\n"; }

RunReport parse_report(const std::string& text) {
  const auto doc = ordered_json::parse(text);
  expect_keys(doc, {"config_echo", "samples", "losses", "warnings"}, "report");
  RunReport r;
  for (const auto& [k, v] : doc["config_echo"].items()) r.config_echo.emplace_back(k, v.dump());
  for (const auto& js : doc["samples"]) {
    expect_keys(js, {"id", "top_words", "saliency", "trace_norms"}, "report.samples");
    SampleReport s;
    s.id = js["id"].get<std::string>();
    for (const auto& w : js["top_words"]) {
      expect_keys(w, {"index", "score"}, "report.samples.top_words");
      s.top_words.emplace_back(w["index"].get<std::size_t>(), w["score"].get<double>());
    }
    s.saliency = js["saliency"].get<std::vector<double>>();
    s.trace_norms = js["trace_norms"].get<std::vector<double>>();
    r.samples.push_back(std::move(s));
  }
  const auto& l = doc["losses"];
  expect_keys(l, {"l_qv", "l_qc", "l_cc", "l_ma"}, "report.losses");
  r.losses.l_qv = l["l_qv"].get<double>();
  r.losses.l_qc = l["l_qc"].get<double>();
  r.losses.l_cc = l["l_cc"].get<double>();
  r.losses.l_ma = l["l_ma"].get<double>();
  r.warnings = doc["warnings"].get<std::vector<std::string>>();
  return r;
}

std::string serialize_train(const TrainResult& result) {
  ordered_json doc = report_json(result.report);
  doc["loss_series"] = rounded(result.loss_series);
  return doc.dump(2) + "\n";
}

std::string serialize_sweep(const std::vector<SweepRow>& rows) {
  ordered_json doc;
  doc["rows"] = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json js;
    js["iters"] = row.iterations;
    js["mean_filtered_l1"] = report_round(row.mean_filtered_l1);
    js["report"] = report_json(row.report);
    doc["rows"].push_back(std::move(js));
  }
  return doc.dump(2) + "\n";
}

std::string format_sweep_table(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(6) << "N" << std::setw(18) << "mean |F_fv|_1" << std::setw(14) << "L_qv"
      << std::setw(14) << "L_qc" << std::setw(14) << "L_cc" << std::setw(14) << "L_ma" << "\n";
  out << std::setprecision(6);
  for (const auto& row : rows) {
    const auto& l = row.report.losses;
    out << std::left << std::setw(6) << row.iterations << std::setw(18) << row.mean_filtered_l1 << std::setw(14)
        << l.l_qv << std::setw(14) << l.l_qc << std::setw(14) << l.l_cc << std::setw(14) << l.l_ma << "\n";
  }
  return out.str();
}

}  // namespace clipfilter
