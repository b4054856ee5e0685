#include "reft/metrics.hpp"

#include "json.hpp"

namespace reft {

using nlohmann::json;

MetricsSink::MetricsSink(const std::string& metrics_path,
                         const std::string& timing_path, std::string run_id,
                         std::string method)
    : metrics_(metrics_path), timing_(timing_path), run_id_(std::move(run_id)),
      method_(std::move(method)) {}

void MetricsSink::record(int64_t step, const std::map<std::string, double>& values) {
  if (!metrics_.is_open()) return;
  json j{{"run", run_id_}, {"method", method_}, {"step", step}};
  for (const auto& [k, v] : values) j[k] = v;
  metrics_ << j.dump() << "\n";
  metrics_.flush();
}

void MetricsSink::record_timing(int64_t step, double seconds) {
  if (!timing_.is_open()) return;
  json j{{"run", run_id_}, {"method", method_}, {"step", step}, {"seconds", seconds}};
  timing_ << j.dump() << "\n";
  timing_.flush();
}

}  // namespace reft
