#include "blockadmm/schedule.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include "blockadmm/metrics.hpp"

namespace blockadmm {

void rho_update(PenaltySchedule& schedule, Scalar residual_norm) {
  if (residual_norm < 0) {
    throw ConfigError("rho_update: residual norm must be nonnegative");
  }
  if (residual_norm > schedule.eta) {
    schedule.rho *= schedule.c;
  }
  ++schedule.k;
  schedule.eta *= schedule.eta_q;
  schedule.eps *= schedule.eps_q;
}

ConvergenceRun convergence_mode_train(std::vector<Block>& blocks,
                                      const Matrix& x, const Matrix& y,
                                      const Matrix* test_x,
                                      const Matrix* test_y, LossKind loss,
                                      ConvergenceConfig cfg, int outer_iters,
                                      Rng& rng) {
  cfg.schedule.validate();
  cfg.schedule.reset();

  const Index t_count = static_cast<Index>(blocks.size());
  const Index n = x.cols();

  BatchAdmmConfig admm = cfg.admm;
  admm.beta.assign(t_count, 1.0 / cfg.schedule.rho);

  ConvergenceRun run;
  CouplingState& state = run.coupling;
  state = init_coupling(blocks, x, admm.beta, admm.dual_init_hi, rng);

  Scalar train_seconds = 0;
  int inner_floor = 1;
  Scalar batch_size = static_cast<Scalar>(admm.theta_batch);
  for (int outer = 0; outer < outer_iters; ++outer) {
    const auto started = std::chrono::steady_clock::now();
    const Scalar rho_before = cfg.schedule.rho;
    state.beta.assign(t_count, 1.0 / rho_before);
    admm.beta = state.beta;
    admm.theta_batch = static_cast<int>(
        std::min<Scalar>(static_cast<Scalar>(n), std::ceil(batch_size)));

    // primal sweeps until the full-gradient criterion is met; the sweep
    // budget grows geometrically and the count never shrinks
    const int cap = std::max(
        inner_floor,
        static_cast<int>(std::ceil(cfg.inner_cap0 *
                                   std::pow(cfg.inner_growth, outer))));
    int sweeps = 0;
    Scalar grad_sq = 0;
    while (true) {
      primal_sweep(state, blocks, x, y, loss, admm, rng, true);
      ++sweeps;
      grad_sq = augmented_grad_sqnorm(state, blocks, x, y, loss);
      if (sweeps >= inner_floor &&
          (grad_sq <= cfg.schedule.eps || sweeps >= cap)) {
        break;
      }
    }
    inner_floor = std::max(inner_floor, sweeps);

    update_duals(state, blocks, x);
    const Scalar h_norm = stacked_residual_norm(state, blocks, x);

    const Scalar eta_k = cfg.schedule.eta;
    const Scalar eps_k = cfg.schedule.eps;
    const int k = cfg.schedule.k;
    rho_update(cfg.schedule, h_norm);
    if (cfg.schedule.rho != rho_before) {
      // keep the unscaled multipliers continuous across the rho change
      const Scalar rescale = cfg.schedule.rho / rho_before;
      for (Matrix& u : state.u) u *= rescale;
    }
    batch_size = std::min<Scalar>(static_cast<Scalar>(n),
                                  batch_size * cfg.batch_growth);
    train_seconds +=
        std::chrono::duration<Scalar>(std::chrono::steady_clock::now() -
                                      started)
            .count();

    run.trace.push_back(
        {k, rho_before, eta_k, eps_k, h_norm, sweeps, grad_sq});

    MetricsRecord rec;
    rec.epoch = outer + 1;
    rec.wall_clock_seconds = train_seconds;
    rec.train_loss = loss_value(loss, y, state.z.back());
    rec.total_coupling_residual = h_norm;
    rec.rho = rho_before;
    if (test_x && test_y) {
      rec.test_accuracy = accuracy(*test_y, straight_through(blocks, *test_x));
    }
    if (!std::isfinite(rec.train_loss)) {
      throw NumericError("convergence_mode_train: non-finite loss");
    }
    run.metrics.push_back(rec);
  }
  return run;
}

void write_trace_csv(const std::string& path,
                     const std::vector<ConvergenceTraceRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open trace file for writing: " + path);
  out << "k,rho,eta,eps,h_norm,inner_iters,grad_sq\n";
  for (const auto& r : rows) {
    out << r.k << ',' << format_csv_value(r.rho) << ','
        << format_csv_value(r.eta) << ',' << format_csv_value(r.eps) << ','
        << format_csv_value(r.h_norm) << ',' << r.inner_iters << ','
        << format_csv_value(r.grad_sq) << '\n';
  }
}

}  // namespace blockadmm
