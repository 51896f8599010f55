#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vqm/anova.hpp"
#include "vqm/csv.hpp"
#include "vqm/error.hpp"
#include "vqm/fitting.hpp"
#include "vqm/models.hpp"
#include "vqm/planner.hpp"
#include "vqm/ratings.hpp"
#include "vqm/types.hpp"

namespace vqm::io {

using nlohmann::json;
using csv::fmt;
using csv::round6;

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline json read_json(std::istream& in, const std::string& what) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(what + ": invalid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Ratings

inline const std::vector<std::string> kRatingColumns = {
    "viewer_id", "sequence_id", "axis", "high_level", "low_level", "fz_s", "fixed_other",
    "raw_score"};

inline TestCondition condition_from(const csv::Row& row, double q_min) {
  TestCondition c;
  c.sequence_id = row.str("sequence_id");
  try {
    c.axis = parse_axis(row.str("axis"));
    c.high_level = row.num("high_level");
    c.low_level = row.num("low_level");
    c.switch_interval_s = row.num("fz_s");
    c.fixed_other = row.num("fixed_other");
    validate(c, q_min);
  } catch (const DomainError& e) {
    row.fail(e.what());
  }
  return c;
}

inline std::vector<RatingRecord> read_ratings_csv(std::istream& in, double q_min = kDefaultQMin) {
  const auto table = csv::Table::read(in, kRatingColumns);
  std::vector<RatingRecord> out;
  for (const auto& row : table.rows()) {
    RatingRecord r{row.str("viewer_id"), condition_from(row, q_min), row.num("raw_score")};
    try {
      validate_raw(r);
    } catch (const DomainError& e) {
      row.fail(e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<std::string> condition_cells(const TestCondition& c) {
  return {c.sequence_id, std::string(to_string(c.axis)), fmt(c.high_level), fmt(c.low_level),
          fmt(c.switch_interval_s), fmt(c.fixed_other)};
}

inline void write_ratings_csv(std::ostream& out, const std::vector<RatingRecord>& ratings) {
  csv::write_row(out, kRatingColumns);
  for (const auto& r : ratings) {
    auto cells = condition_cells(r.condition);
    cells.insert(cells.begin(), r.viewer_id);
    cells.push_back(fmt(r.score));
    csv::write_row(out, cells);
  }
}

// ---------------------------------------------------------------------------
// Quality table

inline const std::vector<std::string> kQualityColumns = {
    "sequence_id", "axis", "high_level", "low_level", "fz_s", "fixed_other",
    "mos", "normalized_q", "n_ratings", "std_dev"};

inline void write_quality_csv(std::ostream& out, const QualityTable& t) {
  csv::write_row(out, kQualityColumns);
  for (const auto& [c, e] : t) {
    auto cells = condition_cells(c);
    cells.push_back(fmt(e.mos));
    cells.push_back(fmt(e.normalized_q));
    cells.push_back(std::to_string(e.n_ratings));
    cells.push_back(fmt(e.std_dev));
    csv::write_row(out, cells);
  }
}

inline QualityTable read_quality_csv(std::istream& in, double q_min = kDefaultQMin) {
  const auto table = csv::Table::read(in, kQualityColumns);
  QualityTable out;
  for (const auto& row : table.rows()) {
    const auto c = condition_from(row, q_min);
    QualityEntry e;
    e.mos = row.num("mos");
    e.normalized_q = row.num("normalized_q");
    const double n = row.num("n_ratings");
    if (n < 1 || n != std::floor(n)) row.fail("n_ratings must be a positive integer");
    e.n_ratings = static_cast<std::size_t>(n);
    e.std_dev = row.num("std_dev");
    if (e.std_dev < 0) row.fail("std_dev must be non-negative");
    if (!out.emplace(c, e).second) row.fail("duplicate condition " + describe(c));
  }
  return out;
}

inline json condition_json(const TestCondition& c) {
  return {{"sequence_id", c.sequence_id},
          {"axis", to_string(c.axis)},
          {"high_level", round6(c.high_level)},
          {"low_level", round6(c.low_level)},
          {"fz_s", round6(c.switch_interval_s)},
          {"fixed_other", round6(c.fixed_other)}};
}

inline json quality_json(const QualityTable& t) {
  json entries = json::array();
  for (const auto& [c, e] : t) {
    json j = condition_json(c);
    j["mos"] = round6(e.mos);
    j["normalized_q"] = round6(e.normalized_q);
    j["n_ratings"] = e.n_ratings;
    j["std_dev"] = round6(e.std_dev);
    entries.push_back(std::move(j));
  }
  return {{"entries", entries}};
}

// ---------------------------------------------------------------------------
// Model parameters

inline json params_json(const ModelParams& p) {
  json j;
  if (p.alpha_t) j["alpha_t"] = round6(*p.alpha_t);
  j["alpha_tv"] = json::object();
  for (const auto& [t_h, a] : p.alpha_tv) j["alpha_tv"][format_level(t_h)] = round6(a);
  if (p.alpha_q) j["alpha_q"] = round6(*p.alpha_q);
  j["alpha_qv"] = json::object();
  for (const auto& [k, a] : p.alpha_qv) j["alpha_qv"][to_string(k)] = round6(a);
  j["t_max"] = round6(p.t_max);
  j["q_min"] = round6(p.q_min);
  return j;
}

namespace detail {

inline double parse_level(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw IoError("params: bad " + what + " key '" + s + "'");
  return v;
}

inline double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw IoError("params: " + what + " must be a number");
  return j.get<double>();
}

}  // namespace detail

inline ModelParams params_from_json(const json& j) {
  if (!j.is_object()) throw IoError("params: expected a JSON object");
  ModelParams p;
  if (j.contains("alpha_t") && !j["alpha_t"].is_null())
    p.alpha_t = detail::number(j["alpha_t"], "alpha_t");
  if (j.contains("alpha_q") && !j["alpha_q"].is_null())
    p.alpha_q = detail::number(j["alpha_q"], "alpha_q");
  if (j.contains("alpha_tv"))
    for (const auto& [k, v] : j["alpha_tv"].items())
      p.alpha_tv[detail::parse_level(k, "alpha_tv")] = detail::number(v, "alpha_tv");
  if (j.contains("alpha_qv"))
    for (const auto& [k, v] : j["alpha_qv"].items()) {
      const auto colon = k.find(':');
      if (colon == std::string::npos) throw IoError("params: alpha_qv key '" + k + "' lacks ':'");
      const std::string cls = k.substr(0, colon);
      FzClass fc;
      if (cls == "fast")
        fc = FzClass::Fast;
      else if (cls == "slow")
        fc = FzClass::Slow;
      else
        throw IoError("params: alpha_qv key '" + k + "' has unknown class");
      p.alpha_qv[{fc, detail::parse_level(k.substr(colon + 1), "alpha_qv")}] =
          detail::number(v, "alpha_qv");
    }
  if (j.contains("t_max")) p.t_max = detail::number(j["t_max"], "t_max");
  if (j.contains("q_min")) p.q_min = detail::number(j["q_min"], "q_min");
  validate(p);
  return p;
}

// A params file is either one ModelParams object or an object mapping
// sequence ids to ModelParams objects.
inline bool is_single_params(const json& j) {
  return j.is_object() && (j.contains("t_max") || j.contains("alpha_t") || j.contains("alpha_q") ||
                           j.contains("alpha_tv") || j.contains("alpha_qv"));
}

inline ModelParams select_params(const json& j, const std::optional<std::string>& sequence_id) {
  if (is_single_params(j)) return params_from_json(j);
  if (!j.is_object() || j.empty()) throw IoError("params: no parameter sets found");
  if (sequence_id) {
    if (!j.contains(*sequence_id))
      throw DomainError("params: no parameters for sequence '" + *sequence_id + "'");
    return params_from_json(j[*sequence_id]);
  }
  if (j.size() != 1)
    throw DomainError("params: file holds several sequences; choose one with --sequence");
  return params_from_json(j.begin().value());
}

// ---------------------------------------------------------------------------
// Fit report and plot data

inline json fit_json(const std::string& curve, const FitResult& f) {
  return {{"curve", curve},
          {"alpha", round6(f.alpha)},
          {"pcc", f.pcc ? json(round6(*f.pcc)) : json(nullptr)},
          {"rmse", round6(f.rmse)},
          {"n_points", f.n_points},
          {"at_bound", f.at_bound}};
}

inline json overall_json(const OverallFit& o) {
  return {{"pcc", o.pcc ? json(round6(*o.pcc)) : json(nullptr)},
          {"rmse", round6(o.rmse)},
          {"n_points", o.n_points}};
}

// Pooled goodness of fit over several sequences plus the per-sequence mean.
inline json pooled_json(const std::vector<const OverallFit*>& fits) {
  OverallFit pooled;
  double pcc_sum = 0.0, rmse_sum = 0.0;
  int pcc_n = 0;
  for (const auto* f : fits) {
    pooled.points.insert(pooled.points.end(), f->points.begin(), f->points.end());
    if (f->pcc) pcc_sum += *f->pcc, ++pcc_n;
    rmse_sum += f->rmse;
  }
  vqm::detail::finish_overall(pooled);
  json j = overall_json(pooled);
  j["mean_pcc"] = pcc_n ? json(round6(pcc_sum / pcc_n)) : json(nullptr);
  j["mean_rmse"] = fits.empty() ? json(nullptr) : json(round6(rmse_sum / fits.size()));
  j["n_sequences"] = fits.size();
  return j;
}

inline json axis_fit_json(const AxisFit& f) {
  json curves = json::array();
  for (const auto& c : f.curves) curves.push_back(fit_json(c.curve, c.fit));
  return {{"sequence_id", f.sequence_id},
          {"axis", to_string(f.axis)},
          {"model", f.axis == Axis::FrameRateVariation ? "QTV" : "QQV"},
          {"curves", curves},
          {"overall", overall_json(f.overall)}};
}

inline const std::vector<std::string> kPlotColumns = {
    "sequence_id", "axis", "curve", "high_level", "low_level", "fz_s", "x", "y_measured", "y_model"};

inline void write_plot_rows(std::ostream& out, const AxisFit& f) {
  auto emit = [&](const std::string& curve, const CurvePoint& p) {
    csv::write_row(out, {f.sequence_id, std::string(to_string(f.axis)), curve,
                         fmt(p.condition.high_level), fmt(p.condition.low_level),
                         fmt(p.condition.switch_interval_s), fmt(p.x), fmt(p.y_measured),
                         fmt(p.y_model)});
  };
  for (const auto& c : f.curves)
    for (const auto& p : c.points) emit(c.curve, p);
  const std::string overall = f.axis == Axis::FrameRateVariation ? "qtv" : "qqv";
  for (const auto& p : f.overall.points) emit(overall, p);
}

// ---------------------------------------------------------------------------
// ANOVA

inline std::vector<Observation> read_observations_csv(std::istream& in,
                                                      const std::string& value_column,
                                                      const std::vector<std::string>& factors) {
  std::vector<std::string> required = factors;
  required.push_back(value_column);
  const auto table = csv::Table::read(in, required);
  std::vector<Observation> out;
  for (const auto& row : table.rows()) {
    Observation o;
    o.value = row.num(value_column);
    for (const auto& f : factors) o.factor_levels[f] = row.str(f);
    out.push_back(std::move(o));
  }
  return out;
}

/// p-values carry four decimals; anything smaller prints as "<1e-4".
inline std::string format_p(double p) {
  if (p < 1e-4) return "<1e-4";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.4f", p);
  return buf;
}

inline void write_anova_csv(std::ostream& out, const AnovaTable& t) {
  csv::write_row(out, {"source", "ss", "df", "ms", "f_value", "p_value"});
  for (const auto& r : t.rows)
    csv::write_row(out, {r.source, fmt(r.ss), std::to_string(r.df), fmt(r.ms), fmt(*r.f_value),
                         format_p(*r.p_value)});
  csv::write_row(out, {t.residual.source, fmt(t.residual.ss), std::to_string(t.residual.df),
                       fmt(t.residual.ms), "", ""});
  csv::write_row(out, {"Total", fmt(t.total_ss), std::to_string(t.total_df), "", "", ""});
}

inline json anova_json(const AnovaTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"source", r.source},
                    {"ss", round6(r.ss)},
                    {"df", r.df},
                    {"ms", round6(r.ms)},
                    {"f_value", round6(*r.f_value)},
                    {"p_value", format_p(*r.p_value)},
                    {"significant", *r.p_value < 0.05}});
  return {{"rows", rows},
          {"residual", {{"ss", round6(t.residual.ss)}, {"df", t.residual.df}, {"ms", round6(t.residual.ms)}}},
          {"total", {{"ss", round6(t.total_ss)}, {"df", t.total_df}}},
          {"factor_order", t.factor_order},
          {"balanced", t.balanced}};
}

// ---------------------------------------------------------------------------
// Rate table and plans

inline RateTable read_rate_table_csv(std::istream& in) {
  const auto table = csv::Table::read(in, {"sequence_id", "fr", "qs", "bitrate_kbps"});
  RateTable rt;
  for (const auto& row : table.rows()) {
    try {
      rt.add(row.str("sequence_id"), {row.num("fr"), row.num("qs")}, row.num("bitrate_kbps"));
    } catch (const DomainError& e) {
      row.fail(e.what());
    }
  }
  rt.validate();
  return rt;
}

inline json config_json(const Config& c) { return {{"fr", round6(c.fr)}, {"qs", round6(c.qs)}}; }

inline json plan_json(const AdaptationPlan& p) {
  return {{"axis", to_string(p.axis)},
          {"high_config", config_json(p.high_config)},
          {"low_config", config_json(p.low_config)},
          {"high_rate_kbps", round6(p.high_rate_kbps)},
          {"low_rate_kbps", round6(p.low_rate_kbps)},
          {"predicted_quality", round6(p.predicted_quality)},
          {"clamps_applied", p.clamps_applied},
          {"outside_evidence", p.outside_evidence}};
}

inline json plan_result_json(const PlanResult& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) cands.push_back(plan_json(c));
  return {{"chosen", plan_json(r.chosen)}, {"candidates", cands}, {"warnings", r.warnings}};
}

// ---------------------------------------------------------------------------
// Screening report

inline json screening_json(const ScreeningReport& rep, const ScreeningOptions& opts) {
  json degenerate = json::array();
  for (const auto& [v, why] : rep.degenerate_viewers)
    degenerate.push_back({{"viewer_id", v}, {"reason", why}});
  json bt500 = json::array();
  for (const auto& v : rep.bt500_rejected) {
    const auto& c = rep.bt500_counts.at(v);
    bt500.push_back({{"viewer_id", v},
                     {"above", c.above},
                     {"below", c.below},
                     {"n_pvs", c.n_pvs},
                     {"reason", "BT.500 outlier: (P+Q)/N = " + fmt(double(c.above + c.below) / c.n_pvs)}});
  }
  json blocks = json::array();
  for (const auto& key : rep.dropped_blocks)
    blocks.push_back({{"viewer_id", key.first},
                      {"sequence_id", key.second},
                      {"violations", rep.violations.at(key)},
                      {"reason", "ordering violations exceed threshold"}});
  return {{"margin", round6(opts.consistency.margin)},
          {"violation_threshold", opts.consistency.violation_threshold},
          {"degenerate_viewers", degenerate},
          {"bt500_rejected", bt500},
          {"dropped_blocks", blocks},
          {"n_survivors", rep.survivors.size()}};
}

}  // namespace vqm::io
