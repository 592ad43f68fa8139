#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blockadmm/types.hpp"

namespace blockadmm {

/// One row per training epoch. wall_clock_seconds counts time spent in the
/// update work only; setup, data loading and metric evaluation are excluded.
struct MetricsRecord {
  int epoch = 0;
  Scalar wall_clock_seconds = 0;
  Scalar train_loss = 0;
  Scalar test_accuracy = 0;
  Scalar total_coupling_residual = 0;
  std::optional<Scalar> rho;
};

/// Schema: epoch,wall_clock_seconds,train_loss,test_accuracy,
/// total_coupling_residual,rho ('.' decimal, empty rho when not applicable,
/// newline-terminated rows).
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRecord>& rows);

std::string format_csv_value(Scalar v);

}  // namespace blockadmm
