#pragma once

#include <cstdint>
#include <ostream>

#include "hdconf/backtest.hpp"
#include "hdconf/factor_model.hpp"
#include "hdconf/fanova.hpp"
#include "hdconf/synthetic.hpp"

namespace hdconf {

/// component,index,age,value rows: grand (empty index), row (region id) and
/// residual (region:year) components.
void write_decomposition_csv(std::ostream& out, const Decomposition& d);
/// method, iterations, tolerance, convergence flag and axes.
void write_decomposition_json(std::ostream& out, const Decomposition& d);

/// year,factor,score
void write_scores_csv(std::ostream& out, const FactorModel& model, const PanelAxes& axes);
/// region,factor,age,loading
void write_loadings_csv(std::ostream& out, const FactorModel& model, const PanelAxes& axes);
/// index,eigenvalue
void write_eigenvalues_csv(std::ostream& out, const FactorModel& model);
/// q, raw q, penalty, q_max and the sign-rule version.
void write_factor_json(std::ostream& out, const FactorModel& model);

/// region,horizon,age,point_log,point_rate,method,origin_year,target_year
void write_forecasts_csv(std::ostream& out, const BacktestResult& result);
/// method,region,horizon,age,lower,upper,alpha,pipeline,origin_year,target_year
void write_intervals_csv(std::ostream& out, const BacktestResult& result);
/// Method,Sex,h then ECP/CPD/score per variant, then n per variant. Gaps print NA;
/// the across-horizon row has h = Mean.
void write_report_csv(std::ostream& out, const EvaluationReport& report);
/// method,sex,variant,h,region,ecp,cpd,score,terms
void write_region_metrics_csv(std::ostream& out, const EvaluationReport& report);

/// Ground-truth components of a synthetic panel.
void write_truth_json(std::ostream& out, const SyntheticSpec& spec, std::uint64_t seed,
                      const SyntheticPanel& synthetic);

}  // namespace hdconf
