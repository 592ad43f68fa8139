#include "blockadmm/metrics.hpp"

#include <cstdio>
#include <fstream>

namespace blockadmm {

std::string format_csv_value(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open metrics file for writing: " + path);
  out << "epoch,wall_clock_seconds,train_loss,test_accuracy,"
         "total_coupling_residual,rho\n";
  for (const MetricsRecord& r : rows) {
    out << r.epoch << ',' << format_csv_value(r.wall_clock_seconds) << ','
        << format_csv_value(r.train_loss) << ','
        << format_csv_value(r.test_accuracy) << ','
        << format_csv_value(r.total_coupling_residual) << ',';
    if (r.rho) out << format_csv_value(*r.rho);
    out << '\n';
  }
}

}  // namespace blockadmm
