#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>

namespace reft {

// Line-delimited metrics records. Scalar metrics go to the metrics file,
// which is byte-reproducible for a fixed config and seed; wall-clock times go
// to a separate timing file so reruns stay comparable byte-for-byte.
class MetricsSink {
 public:
  MetricsSink() = default;
  MetricsSink(const std::string& metrics_path, const std::string& timing_path,
              std::string run_id, std::string method);

  bool enabled() const { return metrics_.is_open(); }

  void record(int64_t step, const std::map<std::string, double>& values);
  void record_timing(int64_t step, double seconds);

 private:
  std::ofstream metrics_, timing_;
  std::string run_id_, method_;
};

}  // namespace reft
