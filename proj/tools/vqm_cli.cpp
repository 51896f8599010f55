// vqm: command-line front end for screening subjective ratings, building
// quality tables, fitting the FR/QS variation models, ANOVA and rate
// adaptation planning.
//
// Exit codes: 0 success, 1 domain or usage error, 2 I/O error.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vqm/io.hpp"
#include "vqm/vqm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Globals {
  double t_max = vqm::kDefaultTMax;
  double q_min = vqm::kDefaultQMin;
  std::string output_dir = ".";
  CLI::Option* t_max_opt = nullptr;
  CLI::Option* q_min_opt = nullptr;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Records what a command read and wrote; saved as manifest.json next to the
// outputs.
class Manifest {
 public:
  Manifest(std::string command, const Globals& g) : command_(std::move(command)), g_(g) {
    fs::create_directories(g.output_dir);
  }

  void input(const std::string& path) { inputs_.push_back(path); }
  void param(const std::string& key, json value) { params_[key] = std::move(value); }

  std::string output_path(const std::string& name) {
    const auto p = (fs::path(g_.output_dir) / name).string();
    outputs_.push_back(p);
    return p;
  }

  void save() const {
    json j = {{"command", command_},
              {"inputs", inputs_},
              {"parameters", params_},
              {"outputs", outputs_},
              {"tool_version", kVersion},
              {"timestamp", utc_timestamp()}};
    j["parameters"]["t_max"] = g_.t_max;
    j["parameters"]["q_min"] = g_.q_min;
    auto out = vqm::io::open_out((fs::path(g_.output_dir) / "manifest.json").string());
    out << j.dump(2) << '\n';
  }

 private:
  std::string command_;
  const Globals& g_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  json params_ = json::object();
};

void write_json(const std::string& path, const json& j) {
  auto out = vqm::io::open_out(path);
  out << j.dump(2) << '\n';
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(vqm::csv::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!vqm::csv::trim(cur).empty()) out.push_back(vqm::csv::trim(cur));
  return out;
}

vqm::ModelParams load_params(const std::optional<std::string>& path,
                             const std::optional<std::string>& sequence, const Globals& g) {
  vqm::ModelParams p;
  if (path) {
    auto in = vqm::io::open_in(*path);
    p = vqm::io::select_params(vqm::io::read_json(in, *path), sequence);
  }
  if (!path || g.t_max_opt->count()) p.t_max = g.t_max;
  if (!path || g.q_min_opt->count()) p.q_min = g.q_min;
  vqm::validate(p);
  return p;
}

// ---------------------------------------------------------------------------

struct ScreenArgs {
  std::string ratings;
  double margin = 0.0;
  int threshold = 2;
};

int run_screen(const ScreenArgs& a, const Globals& g) {
  auto in = vqm::io::open_in(a.ratings);
  const auto raw = vqm::io::read_ratings_csv(in, g.q_min);
  vqm::ScreeningOptions opts;
  opts.consistency.margin = a.margin;
  opts.consistency.violation_threshold = a.threshold;
  const auto rep = vqm::screen_ratings(raw, opts);

  Manifest m("screen", g);
  m.input(a.ratings);
  m.param("margin", a.margin);
  m.param("threshold", a.threshold);
  {
    auto out = vqm::io::open_out(m.output_path("survivors.csv"));
    vqm::io::write_ratings_csv(out, rep.survivors);
  }
  write_json(m.output_path("rejection_report.json"), vqm::io::screening_json(rep, opts));
  m.save();
  std::cout << "screened " << raw.size() << " ratings: " << rep.survivors.size()
            << " kept, " << rep.bt500_rejected.size() << " viewer(s) rejected by BT.500, "
            << rep.dropped_blocks.size() << " block(s) dropped for inconsistency\n";
  return 0;
}

struct MosArgs {
  std::string ratings;
  std::string format = "both";
};

int run_mos(const MosArgs& a, const Globals& g) {
  auto in = vqm::io::open_in(a.ratings);
  const auto ratings = vqm::io::read_ratings_csv(in, g.q_min);
  const auto table = vqm::compute_quality_table(ratings, g.t_max, g.q_min);

  Manifest m("mos", g);
  m.input(a.ratings);
  m.param("format", a.format);
  if (a.format == "csv" || a.format == "both") {
    auto out = vqm::io::open_out(m.output_path("quality_table.csv"));
    vqm::io::write_quality_csv(out, table);
  }
  if (a.format == "json" || a.format == "both")
    write_json(m.output_path("quality_table.json"), vqm::io::quality_json(table));
  m.save();
  std::cout << "quality table: " << table.size() << " conditions\n";
  return 0;
}

struct FitArgs {
  std::string quality;
  std::string axis = "all";
};

int run_fit(const FitArgs& a, const Globals& g) {
  auto in = vqm::io::open_in(a.quality);
  const auto table = vqm::io::read_quality_csv(in, g.q_min);
  const bool want_fr = a.axis == "all" || a.axis == "fr";
  const bool want_qs = a.axis == "all" || a.axis == "qs";

  json params = json::object();
  json per_sequence = json::array();
  std::vector<vqm::AxisFit> fr_fits, qs_fits;

  Manifest m("fit", g);
  m.input(a.quality);
  m.param("axis", a.axis);
  auto plot = vqm::io::open_out(m.output_path("plot.csv"));
  vqm::csv::write_row(plot, vqm::io::kPlotColumns);

  for (const auto& seq : vqm::sequences_in(table)) {
    const auto sub = vqm::select_sequence(table, seq);
    bool has_fr = false, has_qs = false;
    for (const auto& [c, e] : sub)
      (c.axis == vqm::Axis::FrameRateVariation ? has_fr : has_qs) = true;

    vqm::ModelParams p;
    p.t_max = g.t_max;
    p.q_min = g.q_min;
    json entry = {{"sequence_id", seq}, {"fits", json::array()}};
    if (want_fr && has_fr) {
      auto f = vqm::fit_qtv(sub, g.t_max);
      p.alpha_t = f.params.alpha_t;
      p.alpha_tv = f.params.alpha_tv;
      entry["fits"].push_back(vqm::io::axis_fit_json(f));
      vqm::io::write_plot_rows(plot, f);
      fr_fits.push_back(std::move(f));
    }
    if (want_qs && has_qs) {
      auto f = vqm::fit_qqv(sub, g.q_min);
      p.alpha_q = f.params.alpha_q;
      p.alpha_qv = f.params.alpha_qv;
      entry["fits"].push_back(vqm::io::axis_fit_json(f));
      vqm::io::write_plot_rows(plot, f);
      qs_fits.push_back(std::move(f));
    }
    if (entry["fits"].empty()) continue;
    params[seq] = vqm::io::params_json(p);
    per_sequence.push_back(std::move(entry));
  }
  if (per_sequence.empty())
    throw vqm::DomainError("fit: no conditions for the requested axis in " + a.quality);

  json report = {{"sequences", per_sequence}};
  auto pooled = [](const std::vector<vqm::AxisFit>& fits) {
    std::vector<const vqm::OverallFit*> ptrs;
    for (const auto& f : fits) ptrs.push_back(&f.overall);
    return vqm::io::pooled_json(ptrs);
  };
  if (!fr_fits.empty()) report["pooled"]["QTV"] = pooled(fr_fits);
  if (!qs_fits.empty()) report["pooled"]["QQV"] = pooled(qs_fits);

  write_json(m.output_path("params.json"), params);
  write_json(m.output_path("fit_report.json"), report);
  m.save();
  std::cout << "fitted " << per_sequence.size() << " sequence(s)\n";
  return 0;
}

struct PredictArgs {
  std::string model;
  std::vector<double> args;
  std::optional<std::string> params;
  std::optional<std::string> sequence;
};

int run_predict(const PredictArgs& a, const Globals& g) {
  const auto need = [&](std::size_t n) {
    if (a.args.size() != n)
      throw vqm::DomainError("predict " + a.model + " takes " + std::to_string(n) +
                             " argument(s), got " + std::to_string(a.args.size()));
  };
  const auto note_fz = [](double fz) {
    if (vqm::classify_fz(fz).extrapolated)
      std::cerr << "note: Fz = " << vqm::csv::fmt(fz)
                << " s is outside the tested {1, 2, 3} s; class extrapolated\n";
  };
  if (a.model == "qp2qs") {
    need(1);
    std::cout << vqm::csv::fmt(vqm::qp_to_qs(static_cast<int>(a.args[0]))) << '\n';
    return 0;
  }
  const auto p = load_params(a.params, a.sequence, g);
  double v = 0.0;
  if (a.model == "mnqt_c") {
    need(1);
    v = vqm::mnqt_c(a.args[0], p);
  } else if (a.model == "mnqt_v") {
    need(2);
    v = vqm::mnqt_v(a.args[0], a.args[1], p);
  } else if (a.model == "qtv") {
    need(2);
    v = vqm::qtv(a.args[0], a.args[1], p);
  } else if (a.model == "mnqq_c") {
    need(1);
    v = vqm::mnqq_c(a.args[0], p);
  } else if (a.model == "mnqq_v") {
    need(3);
    note_fz(a.args[2]);
    v = vqm::mnqq_v(a.args[0], a.args[1], a.args[2], p);
  } else if (a.model == "qqv") {
    need(3);
    note_fz(a.args[2]);
    v = vqm::qqv(a.args[0], a.args[1], a.args[2], p);
  } else {
    throw vqm::DomainError("unknown model '" + a.model + "'");
  }
  std::cout << vqm::csv::fmt(v) << '\n';
  return 0;
}

struct AnovaArgs {
  std::string observations;
  std::string factors;
  std::string interaction;
  std::string value_column = "value";
};

int run_anova(const AnovaArgs& a, const Globals& g) {
  const auto main = split_list(a.factors);
  const auto inter = split_list(a.interaction);
  if (main.empty() == inter.empty())
    throw vqm::DomainError("anova: give exactly one of --factors or --interaction");
  if (!inter.empty() && inter.size() != 2)
    throw vqm::DomainError("anova: --interaction takes two factor names");

  auto in = vqm::io::open_in(a.observations);
  const auto obs = vqm::io::read_observations_csv(in, a.value_column, main.empty() ? inter : main);
  const auto table = main.empty() ? vqm::anova_two_way_interaction(obs, inter[0], inter[1])
                                  : vqm::anova_main_effects(obs, main);

  Manifest m("anova", g);
  m.input(a.observations);
  m.param("factors", main);
  m.param("interaction", inter);
  m.param("value_column", a.value_column);
  {
    auto out = vqm::io::open_out(m.output_path("anova.csv"));
    vqm::io::write_anova_csv(out, table);
  }
  write_json(m.output_path("anova.json"), vqm::io::anova_json(table));
  m.save();
  vqm::io::write_anova_csv(std::cout, table);
  return 0;
}

struct PlanArgs {
  std::string rates;
  std::string sequence;
  double r_high = 0.0;
  double r_low = 0.0;
  double fz = 3.0;
  std::optional<std::string> params;
  std::string ladder_fr;
  std::string ladder_qs;
};

int run_plan(const PlanArgs& a, const Globals& g) {
  auto in = vqm::io::open_in(a.rates);
  const auto rates = vqm::io::read_rate_table_csv(in);
  const auto p = load_params(a.params, a.sequence, g);

  auto ladder = vqm::full_ladder(rates, a.sequence);
  const auto to_numbers = [](const std::string& s) {
    std::vector<double> v;
    for (const auto& item : split_list(s)) v.push_back(std::stod(item));
    return v;
  };
  if (!a.ladder_fr.empty() || !a.ladder_qs.empty()) {
    const auto frs = to_numbers(a.ladder_fr), qss = to_numbers(a.ladder_qs);
    std::vector<vqm::Config> restricted;
    for (const auto& c : ladder) {
      const bool fr_ok = frs.empty() || std::find(frs.begin(), frs.end(), c.fr) != frs.end();
      const bool qs_ok = qss.empty() || std::find(qss.begin(), qss.end(), c.qs) != qss.end();
      if (fr_ok && qs_ok) restricted.push_back(c);
    }
    ladder = std::move(restricted);
  }
  const auto res = vqm::plan(rates, a.sequence, a.r_high, a.r_low, a.fz, p, ladder);

  Manifest m("plan", g);
  m.input(a.rates);
  if (a.params) m.input(*a.params);
  m.param("sequence", a.sequence);
  m.param("r_high", a.r_high);
  m.param("r_low", a.r_low);
  m.param("fz_s", a.fz);
  write_json(m.output_path("plan.json"), vqm::io::plan_result_json(res));
  m.save();
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << to_string(res.chosen.axis) << ' ' << vqm::describe(res.chosen.high_config)
            << " <-> " << vqm::describe(res.chosen.low_config)
            << " quality=" << vqm::csv::fmt(res.chosen.predicted_quality) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quality models for video with alternating frame rate or quantization stepsize"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Globals g;
  g.t_max_opt = app.add_option("--t-max", g.t_max, "Maximum frame rate in Hz")
                    ->capture_default_str()->check(CLI::PositiveNumber);
  g.q_min_opt = app.add_option("--q-min", g.q_min, "Minimum quantization stepsize")
                    ->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--output-dir", g.output_dir, "Directory for output files")
      ->capture_default_str();

  ScreenArgs screen;
  auto* s = app.add_subcommand("screen", "Z-score, BT.500 and consistency screening of ratings");
  s->add_option("ratings", screen.ratings, "Ratings CSV")->required();
  s->add_option("--margin", screen.margin, "Dead band in raw points for ordering violations")
      ->capture_default_str();
  s->add_option("--threshold", screen.threshold,
                "Drop a viewer's block for a sequence above this many violations")
      ->capture_default_str();

  MosArgs mos;
  auto* mo = app.add_subcommand("mos", "Per-condition MOS and normalized quality");
  mo->add_option("ratings", mos.ratings, "Screened ratings CSV")->required();
  mo->add_option("--format", mos.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}))->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Least-squares fit of the QTV / QQV parameters");
  f->add_option("quality", fit.quality, "Quality table CSV")->required();
  f->add_option("--axis", fit.axis, "fr, qs or all")
      ->check(CLI::IsMember({"fr", "qs", "all"}))->capture_default_str();

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Evaluate a quality model");
  p->add_option("model", predict.model, "mnqt_c, mnqt_v, qtv, mnqq_c, mnqq_v, qqv or qp2qs")
      ->required();
  p->add_option("args", predict.args, "Model arguments (qqv: q_h q_l fz)");
  p->add_option("--params", predict.params, "ModelParams JSON");
  p->add_option("--sequence", predict.sequence, "Sequence in a multi-sequence params file");

  AnovaArgs anova;
  auto* an = app.add_subcommand("anova", "Fixed-effects ANOVA");
  an->add_option("observations", anova.observations, "Observation CSV")->required();
  an->add_option("--factors", anova.factors, "Comma-separated factors (main effects, in order)");
  an->add_option("--interaction", anova.interaction, "Two factors A,B for A, B and A*B rows");
  an->add_option("--value-column", anova.value_column, "Response column")->capture_default_str();

  PlanArgs plan;
  auto* pl = app.add_subcommand("plan", "Choose FR or QS alternation for a two-level rate");
  pl->add_option("rates", plan.rates, "Rate table CSV")->required();
  pl->add_option("--sequence", plan.sequence, "Sequence id")->required();
  pl->add_option("--r-high", plan.r_high, "High-phase budget (kbps)")->required();
  pl->add_option("--r-low", plan.r_low, "Low-phase budget (kbps)")->required();
  pl->add_option("--fz", plan.fz, "Switching interval in seconds")->capture_default_str();
  pl->add_option("--params", plan.params, "ModelParams JSON");
  pl->add_option("--ladder-fr", plan.ladder_fr, "Allowed frame rates, comma-separated");
  pl->add_option("--ladder-qs", plan.ladder_qs, "Allowed stepsizes, comma-separated");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*s) return run_screen(screen, g);
    if (*mo) return run_mos(mos, g);
    if (*f) return run_fit(fit, g);
    if (*p) return run_predict(predict, g);
    if (*an) return run_anova(anova, g);
    if (*pl) return run_plan(plan, g);
  } catch (const vqm::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const vqm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
