#include "hdconf/exports.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "hdconf/panel_archive.hpp"

namespace hdconf {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json axes_json(const PanelAxes& axes) {
    ordered_json doc;
    doc["regions"] = axes.region_ids;
    doc["years"] = axes.years;
    doc["age_grid"] = axes.age_grid;
    return doc;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void write_decomposition_csv(std::ostream& out, const Decomposition& d) {
    const auto& ax = d.axes;
    out << "component,index,age,value\n";
    for (std::size_t j = 0; j < ax.ages(); ++j) {
        out << "grand,," << format_number(ax.age_grid[j]) << ','
            << format_number(d.grand_effect(static_cast<Eigen::Index>(j))) << '\n';
    }
    for (std::size_t s = 0; s < ax.regions(); ++s) {
        for (std::size_t j = 0; j < ax.ages(); ++j) {
            out << "row," << ax.region_ids[s] << ',' << format_number(ax.age_grid[j]) << ','
                << format_number(d.row_effects(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)))
                << '\n';
        }
    }
    for (std::size_t s = 0; s < ax.regions(); ++s) {
        for (std::size_t t = 0; t < ax.times(); ++t) {
            for (std::size_t j = 0; j < ax.ages(); ++j) {
                out << "residual," << ax.region_ids[s] << ':' << ax.years[t] << ','
                    << format_number(ax.age_grid[j]) << ',' << format_number(d.residuals(s, t, j)) << '\n';
            }
        }
    }
}

void write_decomposition_json(std::ostream& out, const Decomposition& d) {
    ordered_json doc;
    doc["method"] = std::string(to_string(d.method));
    doc["iterations"] = d.iterations_used;
    doc["tol"] = d.tolerance;
    doc["converged"] = d.converged;
    doc["scale"] = std::string(to_string(d.scale));
    doc.update(axes_json(d.axes));
    out << doc.dump(2) << '\n';
}

void write_scores_csv(std::ostream& out, const FactorModel& model, const PanelAxes& axes) {
    out << "year,factor,score\n";
    for (Eigen::Index t = 0; t < model.scores.rows(); ++t) {
        for (Eigen::Index k = 0; k < model.scores.cols(); ++k) {
            out << axes.years.at(static_cast<std::size_t>(t)) << ',' << k + 1 << ','
                << format_number(model.scores(t, k)) << '\n';
        }
    }
}

void write_loadings_csv(std::ostream& out, const FactorModel& model, const PanelAxes& axes) {
    out << "region,factor,age,loading\n";
    for (std::size_t s = 0; s < model.loadings.size(); ++s) {
        const auto& l = model.loadings[s];
        for (Eigen::Index k = 0; k < l.cols(); ++k) {
            for (Eigen::Index j = 0; j < l.rows(); ++j) {
                out << axes.region_ids.at(s) << ',' << k + 1 << ','
                    << format_number(axes.age_grid.at(static_cast<std::size_t>(j))) << ','
                    << format_number(l(j, k)) << '\n';
            }
        }
    }
}

void write_eigenvalues_csv(std::ostream& out, const FactorModel& model) {
    out << "index,eigenvalue\n";
    for (Eigen::Index i = 0; i < model.eigenvalues.size(); ++i) {
        out << i + 1 << ',' << format_number(model.eigenvalues(i)) << '\n';
    }
}

void write_factor_json(std::ostream& out, const FactorModel& model) {
    ordered_json doc;
    doc["q"] = model.q;
    doc["raw_q"] = model.raw_q;
    doc["phi"] = model.penalty;
    doc["q_max"] = model.q_max;
    doc["sign_rule_version"] = kSignRuleVersion;
    doc["times"] = model.scores.rows();
    doc["regions"] = model.loadings.size();
    out << doc.dump(2) << '\n';
}

void write_forecasts_csv(std::ostream& out, const BacktestResult& result) {
    const auto& ax = result.axes;
    out << "region,horizon,age,point_log,point_rate,method,origin_year,target_year\n";
    for (const auto& f : result.forecasts) {
        const std::string method = result.plan.pipelines[f.pipeline].label();
        for (std::size_t j = 0; j < f.point_log.size(); ++j) {
            out << ax.region_ids[f.region] << ',' << f.horizon << ',' << format_number(ax.age_grid[j]) << ','
                << format_number(f.point_log[j]) << ',' << format_number(std::exp(f.point_log[j])) << ','
                << method << ',' << f.origin_year << ',' << f.target_year << '\n';
        }
    }
}

void write_intervals_csv(std::ostream& out, const BacktestResult& result) {
    const auto& ax = result.axes;
    out << "method,region,horizon,age,lower,upper,alpha,pipeline,origin_year,target_year\n";
    for (const auto& rec : result.intervals) {
        const auto& iv = rec.interval;
        const std::string pipeline = result.plan.pipelines[rec.pipeline].label();
        const std::string alpha = format_number(iv.alpha);
        for (std::size_t j = 0; j < iv.lower.size(); ++j) {
            out << to_string(iv.method) << ',' << ax.region_ids[rec.region] << ',' << rec.horizon << ','
                << format_number(ax.age_grid[j]) << ',' << format_number(iv.lower[j]) << ','
                << format_number(iv.upper[j]) << ',' << alpha << ',' << pipeline << ','
                << rec.origin_year << ',' << rec.target_year << '\n';
        }
    }
}

void write_report_csv(std::ostream& out, const EvaluationReport& report) {
    out << "Method,Sex,h";
    for (IntervalMethod v : report.variants) {
        out << ",ECP_" << to_string(v) << ",CPD_" << to_string(v) << ",score_" << to_string(v);
    }
    for (IntervalMethod v : report.variants) out << ",n_" << to_string(v);
    out << '\n';
    for (const auto& row : report.rows) {
        out << row.method << ',' << row.sex << ',';
        if (row.horizon) {
            out << *row.horizon;
        } else {
            out << "Mean";
        }
        for (const auto& cell : row.cells) {
            if (cell.present) {
                out << ',' << format_number(cell.ecp) << ',' << format_number(cell.cpd) << ','
                    << format_number(cell.score);
            } else {
                out << ",NA,NA,NA";
            }
        }
        for (const auto& cell : row.cells) out << ',' << cell.count;
        out << '\n';
    }
}

void write_region_metrics_csv(std::ostream& out, const EvaluationReport& report) {
    out << "method,sex,variant,h,region,ecp,cpd,score,terms\n";
    for (const auto& m : report.regions) {
        out << m.method << ',' << m.sex << ',' << to_string(m.variant) << ',' << m.horizon << ',' << m.region
            << ',' << format_number(m.ecp) << ',' << format_number(m.cpd) << ',' << format_number(m.score)
            << ',' << m.terms << '\n';
    }
}

void write_truth_json(std::ostream& out, const SyntheticSpec& spec, std::uint64_t seed,
                      const SyntheticPanel& synthetic) {
    const auto& truth = synthetic.truth;
    ordered_json doc;
    doc["format"] = "hdconf-truth";
    doc["seed"] = seed;
    doc["q_true"] = truth.factors;
    ordered_json sp;
    sp["regions"] = spec.regions;
    sp["times"] = spec.times;
    sp["ages"] = spec.ages;
    sp["factors"] = spec.factors;
    sp["ar_coefficient"] = spec.ar_coefficient;
    sp["innovation_sd"] = spec.innovation_sd;
    sp["loading_scale"] = spec.loading_scale;
    sp["noise_sd"] = spec.noise_sd;
    sp["grand_effect"] = spec.grand_effect;
    sp["row_effect_sd"] = spec.row_effect_sd;
    sp["first_year"] = spec.first_year;
    doc["spec"] = std::move(sp);
    doc.update(axes_json(synthetic.panel.axes()));
    doc["theta"] = std::vector<double>(truth.grand_effect.data(), truth.grand_effect.data() + truth.grand_effect.size());
    doc["delta"] = matrix_json(truth.row_effects);
    ordered_json loadings = ordered_json::array();
    for (const auto& l : truth.loadings) loadings.push_back(matrix_json(l));
    doc["loadings"] = std::move(loadings);
    doc["scores"] = matrix_json(truth.scores);
    out << doc.dump(2) << '\n';
}

}  // namespace hdconf
