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

#pragma once

#include <string>
#include <vector>

#include "clipfilter/pipeline.hpp"

namespace clipfilter {

// Values are written with 12 significant digits so reports are stable across
// last-bit differences in summation order.
double report_round(double value);

std::string serialize_report(const RunReport& report);
RunReport parse_report(const std::string& text);

std::string serialize_train(const TrainResult& result);
std::string serialize_sweep(const std::vector<SweepRow>& rows);
std::string format_sweep_table(const std::vector<SweepRow>& rows);

}  // namespace clipfilter
