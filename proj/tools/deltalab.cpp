// deltalab: command-line driver for the incidence, expander and theorem
// experiments. Exit codes: 0 all assertions pass, 1 an assertion failed,
// 2 bad input.

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deltalab/json_io.hpp"

namespace dl = deltalab;
using dl::Json;

namespace {

struct Options {
  std::string spec;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 0;
  double slack = 0.2;
  bool seed_given = false;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Writes to a sibling temporary file, then renames it over the target.
void write_atomic(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp);
    f << content;
    if (!f.flush()) throw std::runtime_error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  if (path.empty() || path == "-") return "";
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

Json load_spec(const Options& o) {
  if (o.spec.empty()) throw dl::FormatError("--spec is required");
  return dl::read_json_file(o.spec);
}

// A field that is either an inline object or a path to a JSON file.
Json inline_or_file(const Json& spec, const char* key) {
  if (!spec.contains(key)) throw dl::FormatError(std::string("missing field \"") + key + "\"");
  const auto& v = spec.at(key);
  if (v.is_string()) return dl::read_json_file(v.get<std::string>());
  return v;
}

int cmd_gen(const Options& o) {
  Json spec = load_spec(o);
  if (o.seed_given) spec["seed"] = o.seed;
  const auto type = spec.value("type", std::string());
  if (type == "instance") {
    const int m = spec.value("m", 10);
    const double s = spec.value("s", 0.5);
    const auto style_name = spec.value("style", std::string("random"));
    if (style_name != "random" && style_name != "trainlike")
      throw dl::FormatError("unknown style \"" + style_name + "\"");
    const auto style = style_name == "trainlike" ? dl::InstanceStyle::Trainlike : dl::InstanceStyle::Random;
    const auto inst = dl::generate_instance(dl::Scale::of(m), s, style, spec.value("seed", std::uint64_t{0}));
    Json out{{"s", s},
             {"squares", dl::gridset_to_json(inst.squares)},
             {"tubes", dl::tubes_to_json(inst.tubes)},
             {"witnesses",
              {{"tubes", dl::witness_to_json(inst.witnesses.tubes)},
               {"squares", dl::witness_to_json(inst.witnesses.squares)},
               {"worst_shading", dl::witness_to_json(inst.witnesses.worst_shading)},
               {"worst_dual", dl::witness_to_json(inst.witnesses.worst_dual)}}}};
    write_atomic(o.out, out.dump() + "\n");
    return 0;
  }
  const auto g = dl::genspec_from_json(spec);
  write_atomic(o.out, dl::gridset_to_json(dl::generate_set(g)).dump() + "\n");
  return 0;
}

int cmd_validate(const Options& o) {
  const Json spec = load_spec(o);
  const Json set = spec.contains("set") ? inline_or_file(spec, "set") : spec;
  const double s = spec.value("s", 1.0);
  const auto kind = spec.value("kind", std::string("katz-tao")) == "frostman" ? dl::SetKind::Frostman
                                                                             : dl::SetKind::KatzTao;
  const auto w = dl::gridset_is_2d(set) ? dl::validate_set(dl::gridset2d_from_json(set), kind, s)
                                        : dl::validate_set(dl::gridset1d_from_json(set), kind, s);
  Json out = dl::witness_to_json(w);
  bool ok = true;
  if (spec.contains("C_max")) {
    const double cmax = spec.at("C_max").get<double>();
    ok = w.C <= cmax;
    out["C_max"] = cmax;
    out["pass"] = ok;
  }
  write_atomic(o.out, out.dump() + "\n");
  return ok ? 0 : 1;
}

int cmd_incidence(const Options& o) {
  const Json spec = load_spec(o);
  const auto squares = dl::gridset2d_from_json(inline_or_file(spec, "squares"));
  const auto tubes = dl::tubes_from_json(inline_or_file(spec, "tubes"));
  if (squares.scale() != tubes.scale) throw dl::FormatError("squares and tubes at different scales");
  const auto sh = dl::full_shading(tubes, squares);
  Json out{{"I", sh.size()}, {"I_weighted", dl::incidence_count(tubes, squares, true)}};
  if (spec.value("dump_shading", false)) out["shading"] = dl::shading_to_json(sh);
  bool ok = true;
  if (spec.contains("expect_I")) {
    ok = sh.size() == spec.at("expect_I").get<std::int64_t>();
    out["pass"] = ok;
  }
  write_atomic(o.out, out.dump() + "\n");
  return ok ? 0 : 1;
}

int cmd_expander(const Options& o) {
  Json spec = load_spec(o);
  if (o.seed_given) spec["seed"] = o.seed;
  const auto e = dl::experiment_from_json(spec);
  const auto fit = dl::exponent_fit(e);
  std::ostringstream csv;
  csv << "m,delta,card_A,card_B,card_P,image_cover,energy,fitted_exponent,theory_exponent\n";
  for (const auto& r : fit.rows)
    csv << r.m << ',' << num(r.delta) << ',' << r.card_A << ',' << r.card_B << ',' << r.card_P << ','
        << r.image_cover << ',' << r.energy << ",,\n";
  csv << "summary,,,,,,," << num(fit.slope) << ',' << num(fit.theory_exponent) << '\n';
  write_atomic(o.out, csv.str());
  if (spec.contains("min_exponent")) return fit.slope >= spec.at("min_exponent").get<double>() ? 0 : 1;
  return 0;
}

struct TheoremRow {
  std::uint64_t seed = 0;
  int m = 0;
  double s = 0;
  std::string style;
  dl::FinalBoundReport report;
  bool ran_pipeline = false;
  bool early_exit = false;
  int steps_completed = 0;
  std::string violation;
  std::vector<Json> trace;
};

const char* kTheoremHeader =
    "seed,m,s,style,card_T,card_P,I,exponent,bound,ratio,within,NNp,NNp_bound,NNp_within,remark_exponent,"
    "remark_P25_T35,remark_P35_T25,remark_geometric,stronger_than_remark,steps_completed,early_exit,violation\n";

std::string theorem_csv_row(const TheoremRow& r) {
  const auto& f = r.report;
  std::ostringstream os;
  os << r.seed << ',' << r.m << ',' << num(r.s) << ',' << r.style << ',' << f.card_T << ',' << f.card_P << ','
     << f.I << ',' << num(f.exponent) << ',' << num(f.bound) << ',' << num(f.ratio) << ',' << (f.within ? 1 : 0)
     << ',' << (f.NNp ? num(*f.NNp) : "") << ',' << (f.NNp_bound ? num(*f.NNp_bound) : "") << ','
     << (f.NNp_within ? (*f.NNp_within ? "1" : "0") : "") << ',' << num(f.remark_exponent) << ','
     << num(f.remark_bounds[0]) << ',' << num(f.remark_bounds[1]) << ',' << num(f.remark_bounds[2]) << ','
     << (f.stronger_than_remark ? 1 : 0) << ',' << r.steps_completed << ',' << (r.early_exit ? 1 : 0) << ','
     << r.violation << '\n';
  return os.str();
}

bool theorem_ok(const TheoremRow& r) {
  if (!r.violation.empty()) return false;
  if (r.report.card_T == 0) return true;
  return r.report.within && r.report.NNp_within.value_or(true);
}

TheoremRow run_theorem(int m, double s, const std::string& style, std::uint64_t seed, double epsilon, double slack,
                       double report_slack) {
  TheoremRow row;
  row.seed = seed;
  row.m = m;
  row.s = s;
  row.style = style;
  if (style == "empty") return row;
  const auto st_style = style == "trainlike" ? dl::InstanceStyle::Trainlike : dl::InstanceStyle::Random;
  if (style != "trainlike" && style != "random") throw dl::FormatError("unknown style \"" + style + "\"");
  const auto inst = dl::generate_instance(dl::Scale::of(m), s, st_style, seed);
  try {
    const auto st = dl::run_pipeline(inst, epsilon, slack);
    row.ran_pipeline = true;
    row.early_exit = st.early_exit;
    row.steps_completed = st.steps_completed;
    for (const auto& t : st.trace) row.trace.push_back(dl::trace_to_json(t));
    row.trace.push_back(dl::pipeline_summary_to_json(st));
    row.report = dl::final_bound_report(inst, &st, report_slack);
  } catch (const dl::StepClaimViolation& e) {
    row.violation = std::to_string(e.step);
    row.report = dl::final_bound_report(inst, nullptr, report_slack);
  }
  return row;
}

int cmd_theorem(const Options& o) {
  const Json spec = load_spec(o);
  const auto seed = o.seed_given ? o.seed : spec.value("seed", std::uint64_t{0});
  const auto row = run_theorem(spec.value("m", 10), spec.value("s", 0.5), spec.value("style", std::string("random")),
                               seed, spec.value("epsilon", 0.1), o.slack, spec.value("report_slack", 0.15));
  std::string jsonl;
  for (const auto& t : row.trace) jsonl += t.dump() + "\n";
  const std::string trace_path = spec.contains("trace") ? spec.at("trace").get<std::string>()
                                                        : sibling(o.out, ".trace.jsonl");
  if (trace_path.empty())
    std::cerr << jsonl;
  else
    write_atomic(trace_path, jsonl);
  write_atomic(o.out, std::string(kTheoremHeader) + theorem_csv_row(row));
  return theorem_ok(row) ? 0 : 1;
}

template <typename T>
std::vector<T> list_or_scalar(const Json& spec, const char* key, T fallback) {
  if (!spec.contains(key)) return {fallback};
  const auto& v = spec.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

int cmd_sweep(const Options& o) {
  const Json spec = load_spec(o);
  const auto ms = list_or_scalar<int>(spec, "m", 10);
  const auto ss = list_or_scalar<double>(spec, "s", 0.5);
  const auto styles = list_or_scalar<std::string>(spec, "style", "random");
  std::vector<std::uint64_t> seeds;
  if (spec.contains("seeds")) {
    seeds = list_or_scalar<std::uint64_t>(spec, "seeds", 0);
  } else {
    const auto count = spec.value("count", 1);
    const auto base = o.seed_given ? o.seed : spec.value("seed", std::uint64_t{0});
    for (int k = 0; k < count; ++k) seeds.push_back(base + static_cast<std::uint64_t>(k));
  }
  struct Point {
    int m;
    double s;
    std::string style;
    std::uint64_t seed;
  };
  std::vector<Point> points;
  for (int m : ms)
    for (double s : ss)
      for (const auto& style : styles)
        for (auto seed : seeds) points.push_back({m, s, style, seed});
  for (const auto& p : points)
    if (p.style != "random" && p.style != "trainlike") throw dl::FormatError("unknown style \"" + p.style + "\"");

  const double epsilon = spec.value("epsilon", 0.1), report_slack = spec.value("report_slack", 0.15);
  std::vector<TheoremRow> rows(points.size());
  std::vector<std::string> errors(points.size());
  const auto n = static_cast<std::int64_t>(points.size());
  // Points run in parallel; the kernels inside each point run serially.
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto& p = points[static_cast<std::size_t>(k)];
    try {
      rows[static_cast<std::size_t>(k)] = run_theorem(p.m, p.s, p.style, p.seed, epsilon, o.slack, report_slack);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(k)] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  std::string csv = kTheoremHeader;
  bool ok = true;
  for (const auto& r : rows) {
    csv += theorem_csv_row(r);
    ok = ok && theorem_ok(r);
  }
  write_atomic(o.out, csv);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deltalab: discretized incidence and expander experiments"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", o.spec, "JSON spec file")->required();
    sub->add_option("--seed", o.seed, "seed, overrides any seed in the --spec file")->each([&](const std::string&) {
      o.seed_given = true;
    });
    sub->add_option("--out", o.out, "output path (stdout when omitted)");
    sub->add_option("--jobs", o.jobs, "worker threads (default: DELTA_LAB_JOBS, then all cores)");
    sub->add_option("--slack", o.slack, "early-exit slack upsilon")->check(CLI::Range(0.0, 1.0));
  };
  struct Sub {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Sub subs[] = {{"gen", "generate a grid set or a theorem instance", cmd_gen},
                      {"validate", "Katz-Tao / Frostman witness of a grid set", cmd_validate},
                      {"incidence", "shading and incidence count of squares and tubes", cmd_incidence},
                      {"expander", "covering-number sweep of x(x+y) with exponent fit", cmd_expander},
                      {"theorem", "pipeline trace and bound report for one instance", cmd_theorem},
                      {"sweep", "bound reports over a grid of (m, s, style, seed)", cmd_sweep}};
  int (*chosen)(const Options&) = nullptr;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    sub->callback([&chosen, fn = s.fn] { chosen = fn; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  int jobs = o.jobs;
  if (jobs <= 0)
    if (const char* env = std::getenv("DELTA_LAB_JOBS")) jobs = std::atoi(env);
  if (jobs > 0) omp_set_num_threads(jobs);

  try {
    return chosen(o);
  } catch (const dl::FormatError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
