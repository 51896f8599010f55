#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vqm/error.hpp"
#include "vqm/special.hpp"

namespace vqm {

struct Observation {
  double value = 0.0;
  std::map<std::string, std::string> factor_levels;
};

struct AnovaRow {
  std::string source;
  double ss = 0.0;
  int df = 0;
  double ms = 0.0;
  std::optional<double> f_value;  // empty on the residual row
  std::optional<double> p_value;
};

struct AnovaTable {
  std::vector<AnovaRow> rows;  // effect rows in the order they entered the model
  AnovaRow residual;
  double total_ss = 0.0;
  int total_df = 0;
  std::vector<std::string> factor_order;  // order used for sequential SS
  bool balanced = false;

  const AnovaRow& row(const std::string& source) const {
    for (const auto& r : rows)
      if (r.source == source) return r;
    throw DomainError("anova table has no row '" + source + "'");
  }
};

namespace detail {

using Column = std::vector<double>;

inline double dot(const Column& a, const Column& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Orthonormal basis grown one model term at a time. The sequential sum of
// squares of a term is the squared length of the projection of y onto the
// directions that term adds.
class SequentialProjector {
 public:
  explicit SequentialProjector(Column y) : residual_(std::move(y)) {}

  struct TermResult {
    double ss = 0.0;
    int df = 0;
  };

  TermResult add_term(std::vector<Column> columns) {
    TermResult out;
    for (auto& col : columns) {
      const double norm0 = std::sqrt(dot(col, col));
      if (norm0 == 0.0) continue;
      // Two Gram-Schmidt passes keep the basis orthogonal to working precision.
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis_) {
          const double c = dot(q, col);
          for (std::size_t i = 0; i < col.size(); ++i) col[i] -= c * q[i];
        }
      const double norm = std::sqrt(dot(col, col));
      if (norm <= 1e-10 * norm0) continue;  // linearly dependent on earlier terms
      for (auto& v : col) v /= norm;
      const double c = dot(col, residual_);
      for (std::size_t i = 0; i < col.size(); ++i) residual_[i] -= c * col[i];
      out.ss += c * c;
      ++out.df;
      basis_.push_back(std::move(col));
    }
    return out;
  }

  double residual_ss() const { return dot(residual_, residual_); }
  std::size_t rank() const { return basis_.size(); }

 private:
  std::vector<Column> basis_;
  Column residual_;
};

struct FactorCoding {
  std::vector<std::string> levels;        // sorted
  std::vector<std::size_t> level_index;   // per observation
};

inline FactorCoding code_factor(const std::vector<Observation>& obs, const std::string& factor) {
  std::set<std::string> levels;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    auto it = obs[i].factor_levels.find(factor);
    if (it == obs[i].factor_levels.end())
      throw DomainError("observation " + std::to_string(i) + " has no level for factor '" +
                        factor + "'");
    levels.insert(it->second);
  }
  if (levels.size() < 2)
    throw DomainError("factor '" + factor + "' has fewer than 2 levels");
  FactorCoding fc{{levels.begin(), levels.end()}, {}};
  std::map<std::string, std::size_t> idx;
  for (std::size_t k = 0; k < fc.levels.size(); ++k) idx[fc.levels[k]] = k;
  for (const auto& o : obs) fc.level_index.push_back(idx.at(o.factor_levels.at(factor)));
  return fc;
}

// Treatment-coded indicator columns for levels 1..k-1.
inline std::vector<Column> dummies(const FactorCoding& fc) {
  std::vector<Column> cols(fc.levels.size() - 1, Column(fc.level_index.size(), 0.0));
  for (std::size_t i = 0; i < fc.level_index.size(); ++i)
    if (fc.level_index[i] > 0) cols[fc.level_index[i] - 1][i] = 1.0;
  return cols;
}

inline std::vector<Column> interaction(const std::vector<Column>& a, const std::vector<Column>& b) {
  std::vector<Column> out;
  for (const auto& ca : a)
    for (const auto& cb : b) {
      Column c(ca.size());
      for (std::size_t i = 0; i < c.size(); ++i) c[i] = ca[i] * cb[i];
      out.push_back(std::move(c));
    }
  return out;
}

inline void fill_tests(AnovaTable& t) {
  const double ms_res = t.residual.ms;
  for (auto& r : t.rows) {
    r.ms = r.df > 0 ? r.ss / r.df : 0.0;
    if (ms_res > 0.0) {
      r.f_value = r.ms / ms_res;
    } else {
      r.f_value = r.ms > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    r.p_value = r.df > 0 ? f_sf(*r.f_value, r.df, t.residual.df) : 1.0;
  }
}

inline AnovaTable fit_terms(const std::vector<Observation>& obs,
                            const std::vector<std::pair<std::string, std::vector<Column>>>& terms) {
  Column y;
  for (const auto& o : obs) {
    if (!std::isfinite(o.value)) throw DomainError("anova: non-finite observation value");
    y.push_back(o.value);
  }
  double grand = 0.0;
  for (double v : y) grand += v;
  grand /= static_cast<double>(y.size());
  double total = 0.0;
  for (double v : y) total += (v - grand) * (v - grand);

  SequentialProjector proj(y);
  proj.add_term({Column(y.size(), 1.0)});

  AnovaTable t;
  for (const auto& [name, cols] : terms) {
    const auto r = proj.add_term(cols);
    t.rows.push_back({name, r.ss, r.df, 0.0, {}, {}});
  }
  const int n = static_cast<int>(y.size());
  const int df_res = n - static_cast<int>(proj.rank());
  if (df_res < 1) throw DomainError("anova: no residual degrees of freedom");
  t.residual = {"Residual", proj.residual_ss(), df_res, proj.residual_ss() / df_res, {}, {}};
  t.total_ss = total;
  t.total_df = n - 1;
  fill_tests(t);
  return t;
}

}  // namespace detail

/// Fixed-effects ANOVA with main effects only. Sums of squares are sequential
/// (Type I) in the order of `factors`; for balanced designs this coincides with
/// the level-means formula regardless of order.
inline AnovaTable anova_main_effects(const std::vector<Observation>& obs,
                                     const std::vector<std::string>& factors) {
  if (factors.empty()) throw DomainError("anova: no factors declared");
  std::vector<detail::FactorCoding> codes;
  std::vector<std::pair<std::string, std::vector<detail::Column>>> terms;
  for (const auto& f : factors) {
    codes.push_back(detail::code_factor(obs, f));
    terms.emplace_back(f, detail::dummies(codes.back()));
  }
  auto t = detail::fit_terms(obs, terms);
  t.factor_order = factors;

  std::map<std::vector<std::size_t>, std::size_t> cells;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    std::vector<std::size_t> key;
    for (const auto& c : codes) key.push_back(c.level_index[i]);
    ++cells[key];
  }
  std::size_t n_cells = 1;
  for (const auto& c : codes) n_cells *= c.levels.size();
  t.balanced = cells.size() == n_cells;
  for (const auto& [k, n] : cells) t.balanced = t.balanced && n == cells.begin()->second;
  return t;
}

/// Two-way fixed-effects ANOVA with rows for A, B and the A*B interaction.
/// Every (A, B) cell must hold at least one observation.
inline AnovaTable anova_two_way_interaction(const std::vector<Observation>& obs,
                                            const std::string& factor_a,
                                            const std::string& factor_b) {
  const auto a = detail::code_factor(obs, factor_a);
  const auto b = detail::code_factor(obs, factor_b);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> cells;
  for (std::size_t i = 0; i < obs.size(); ++i) ++cells[{a.level_index[i], b.level_index[i]}];
  for (std::size_t i = 0; i < a.levels.size(); ++i)
    for (std::size_t j = 0; j < b.levels.size(); ++j)
      if (!cells.contains({i, j}))
        throw DomainError("anova: empty cell (" + factor_a + "=" + a.levels[i] + ", " + factor_b +
                          "=" + b.levels[j] + ")");

  const auto da = detail::dummies(a), db = detail::dummies(b);
  auto t = detail::fit_terms(obs, {{factor_a, da},
                                   {factor_b, db},
                                   {factor_a + "*" + factor_b, detail::interaction(da, db)}});
  t.factor_order = {factor_a, factor_b};
  t.balanced = true;
  for (const auto& [k, n] : cells) t.balanced = t.balanced && n == cells.begin()->second;
  return t;
}

}  // namespace vqm
