// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#include "prism/common/metrics.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace prism {

double wall_time() {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return std::chrono::duration<double>(now).count();
}

MetricWriter::MetricWriter(std::filesystem::path path) : path_(std::move(path)) {
  out_.open(path_, std::ios::out | std::ios::app | std::ios::binary);
  if (!out_) {
    throw IoError(fmt::format("cannot open metrics file '{}'", path_.string()));
  }
}

void MetricWriter::write(const std::vector<MetricRecord>& records) {
  std::string buffer;
  std::int64_t last = last_step_;
  for (const auto& r : records) {
    if (r.step < last) {
      throw ValueError(fmt::format("metric '{}' at step {} precedes step {}", r.name, r.step, last));
    }
    last = r.step;
    nlohmann::ordered_json line;
    line["step"] = r.step;
    line["name"] = r.name;
    line["value"] = r.value;  // non-finite values serialize as null
    line["time"] = r.time;
    buffer += line.dump();
    buffer += '\n';
  }
  out_ << buffer;
  out_.flush();
  if (!out_) {
    throw IoError(fmt::format("failed writing metrics file '{}'", path_.string()));
  }
  last_step_ = last;
}

void write_metrics(MetricWriter& sink, const std::vector<MetricRecord>& records) {
  sink.write(records);
}

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open metrics file '{}'", path.string()));
  }
  std::vector<MetricRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      MetricRecord r;
      r.step = j.at("step").get<std::int64_t>();
      r.name = j.at("name").get<std::string>();
      r.value = j.at("value").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : j.at("value").get<double>();
      r.time = j.at("time").get<double>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(fmt::format("{}:{}: malformed metric record: {}", path.string(), lineno, e.what()));
    }
  }
  return records;
}

}  // namespace prism
