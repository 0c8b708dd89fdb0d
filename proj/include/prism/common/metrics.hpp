// Copyright 2026 The Prism Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "prism/tensor/dtype.hpp"

namespace prism {

class IoError : public Error {
 public:
  using Error::Error;
};

struct MetricRecord {
  std::int64_t step = 0;
  std::string name;
  double value = 0.0;
  double time = 0.0;  // seconds since the Unix epoch

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

/// Seconds since the Unix epoch.
double wall_time();

/// Append-only JSON-lines sink. One object per record with keys step, name,
/// value, time. Steps must be non-decreasing over the writer's lifetime.
/// Not thread-safe.
class MetricWriter {
 public:
  explicit MetricWriter(std::filesystem::path path);

  /// Appends and flushes. Throws IoError on write failure and ValueError if a
  /// step is negative or lower than a previously written one.
  void write(const std::vector<MetricRecord>& records);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::int64_t last_step_ = 0;
};

void write_metrics(MetricWriter& sink, const std::vector<MetricRecord>& records);

/// Parses a metrics file written by MetricWriter.
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

}  // namespace prism
