#include "siglab/sim.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace siglab {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

double total_travel_time_hours(const std::vector<double>& queue_series, double dt) {
  double vehicle_seconds = 0;
  for (std::size_t i = 1; i < queue_series.size(); ++i)
    vehicle_seconds += queue_series[i] * dt;
  return vehicle_seconds / 3600.0;
}

std::vector<std::pair<double, double>> aggregate_queue(
    const std::vector<double>& series, double window) {
  if (!(window > 0)) throw std::invalid_argument("window must be > 0");
  std::vector<std::pair<double, double>> out;
  const std::size_t w = static_cast<std::size_t>(window);
  for (std::size_t begin = 0; begin < series.size(); begin += w) {
    std::size_t end = std::min(begin + w, series.size());
    double sum = 0;
    for (std::size_t i = begin; i < end; ++i) sum += series[i];
    out.emplace_back(static_cast<double>(begin), sum / static_cast<double>(end - begin));
  }
  return out;
}

double RunResult::mean_cycle_s() const {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& junction : cycle_lengths) {
    for (double c : junction) sum += c;
    n += junction.size();
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::string RunResult::serialize() const {
  std::ostringstream out;
  out << "run-result v1\n";
  out << "seed " << seed << "\n";
  out << "scenario_hash " << scenario_hash << "\n";
  out << "ttt_hours " << format_double(ttt_hours) << "\n";
  out << "infinite " << (infinite ? 1 : 0) << "\n";
  out << "blocked_events " << blocked_events << "\n";
  out << "queue_series " << queue_series.size() << "\n";
  for (double q : queue_series) out << format_double(q) << "\n";
  out << "cycles " << cycle_lengths.size() << "\n";
  for (const auto& junction : cycle_lengths) {
    out << junction.size();
    for (double c : junction) out << " " << format_double(c);
    out << "\n";
  }
  return out.str();
}

}  // namespace siglab
