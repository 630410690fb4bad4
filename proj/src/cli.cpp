#include "hsdid/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "hsdid/did.hpp"
#include "hsdid/error.hpp"
#include "hsdid/fe.hpp"
#include "hsdid/match.hpp"
#include "hsdid/psdiag.hpp"
#include "hsdid/report.hpp"
#include "hsdid/sim.hpp"

namespace fs = std::filesystem;

namespace hsdid {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Tenure> RunConfig::tenures() const {
  if (tenure == "all") return {kTenures.begin(), kTenures.end()};
  return {parse_tenure(tenure)};
}

std::string RunConfig::canonical() const {
  std::ostringstream s;
  s << "verb = " << verb << "\n"
    << "input = " << input << "\n"
    << "outcome = " << outcome << "\n"
    << "tenure = " << tenure << "\n"
    << "norms = " << norms << "\n"
    << "oecd_scale = " << oecd_scale << "\n"
    << "income_floor = " << income_floor << "\n"
    << "reps = " << reps << "\n"
    << "pipeline = " << mc_pipeline << "\n";
  if (verb == "simulate" || verb == "mc") s << dgp.to_text();
  return s.str();
}

namespace {

const std::vector<std::string> kVerbs{"ingest", "derive", "fe",       "match",   "did",
                                      "psdiag", "simulate", "mc", "pipeline"};

class UsageError : public InputError {
 public:
  using InputError::InputError;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw InputError("config: '" + key + "' expects a number, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw InputError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return std::stoull(v);
}

// Run keys are consumed here; everything else belongs to the simulator.
void apply_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file '" + path + "'");
  std::string line, sim_text;
  while (std::getline(f, line)) {
    std::string body = line;
    if (auto hash = body.find('#'); hash != std::string::npos) body.erase(hash);
    body = trim(body);
    const auto eq = body.find('=');
    if (body.empty() || eq == std::string::npos) {
      sim_text += line + "\n";
      continue;
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key == "input") cfg.input = value;
    else if (key == "out") cfg.out = value;
    else if (key == "outcome") cfg.outcome = value;
    else if (key == "tenure") {
      // Shared with the simulator's matched-mode tenure.
      cfg.tenure = value;
      if (value != "all") sim_text += line + "\n";
    } else if (key == "norms") cfg.norms = value;
    else if (key == "oecd_scale") cfg.oecd_scale = value;
    else if (key == "income_floor") cfg.income_floor = to_double(key, value);
    else if (key == "seed") cfg.seed = to_u64(key, value);
    else if (key == "reps") cfg.reps = static_cast<std::size_t>(to_u64(key, value));
    else if (key == "pipeline") cfg.mc_pipeline = value;
    else sim_text += line + "\n";
  }
  cfg.dgp = DgpConfig::parse(sim_text, cfg.dgp);
}

void validate(const RunConfig& cfg) {
  if (cfg.outcome != cols::kMcs && cfg.outcome != cols::kMentalHealthScale) {
    throw InputError("outcome must be mcs or mental_health_scale, got '" + cfg.outcome + "'");
  }
  if (cfg.tenure != "all") parse_tenure(cfg.tenure);
  parse_oecd_scale(cfg.oecd_scale);
  parse_mc_pipeline(cfg.mc_pipeline);
  if (cfg.income_floor <= 0) throw InputError("income floor must be positive");
  if (cfg.reps < 1) throw InputError("reps must be at least 1");
  const bool needs_input = cfg.verb != "simulate" && cfg.verb != "mc";
  if (needs_input) {
    if (cfg.input.empty()) throw UsageError("--input is required for '" + cfg.verb + "'");
    if (!fs::is_regular_file(cfg.input)) throw InputError("input file not found: '" + cfg.input + "'");
  }
  if (!cfg.norms.empty() && !fs::is_regular_file(cfg.norms)) {
    throw InputError("norms file not found: '" + cfg.norms + "'");
  }
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Files written by one run. Failure removes them all.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(dir_);
    const fs::path p = dir_ / name;
    written_.push_back(p);
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write '" + p.string() + "'");
    f << content;
    if (!f) throw InputError("failed writing '" + p.string() + "'");
    names_.push_back(name);
  }

  void remove_all() noexcept {
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  std::vector<std::string> names_;
};

struct RunState {
  const RunConfig& cfg;
  Artifacts artifacts;
  Json row_counts = Json::object();
  Json dropped_rows = Json::object();
  std::ostream& out;
};

DeriveConfig derive_config(const RunConfig& cfg) {
  DeriveConfig d;
  if (!cfg.norms.empty()) d.norms = PopulationNorms::load_csv(cfg.norms);
  d.oecd_scale = parse_oecd_scale(cfg.oecd_scale);
  d.income_floor = cfg.income_floor;
  return d;
}

IngestResult load_input(RunState& st) {
  const auto header = read_csv_header(st.cfg.input);
  auto res = ingest_csv(st.cfg.input, schema_for_header(header));
  st.row_counts["input_rows"] = res.report.rows;
  st.row_counts["input_persons"] = res.data.person_count();
  return res;
}

DeriveResult load_derived(RunState& st) {
  auto in = load_input(st);
  auto d = derive_variables(in.data, derive_config(st.cfg));
  st.row_counts["derived_rows"] = d.report.rows;
  st.dropped_rows["hardship_missing_rows"] = d.report.hardship_missing_rows;
  return d;
}

std::string cell_name(Tenure t, Subgroup s) {
  return std::string(to_string(t)) + "_" + std::string(to_string(s));
}

struct MatchedCells {
  std::vector<MatchedSubsample> subsamples;  // tenure-major, subgroups Low/Moderate/High
  std::map<Tenure, CandidateReport> reports;
};

MatchedCells build_cells(RunState& st, const PanelDataset& derived) {
  MatchedCells cells;
  const auto columns = default_analysis_columns(st.cfg.outcome);
  for (Tenure t : st.cfg.tenures()) {
    CandidateReport rep;
    auto subs = build_subsamples(derived, t, columns, &rep);
    cells.reports[t] = rep;
    for (auto& ms : subs) {
      st.row_counts["matched_persons_" + cell_name(ms.tenure, ms.subgroup)] = ms.candidates.size();
      cells.subsamples.push_back(std::move(ms));
    }
  }
  return cells;
}

void write_match_artifacts(RunState& st, const MatchedCells& cells) {
  const auto columns = default_analysis_columns(st.cfg.outcome);
  Json j = Json::object();
  for (const auto& [t, rep] : cells.reports) {
    Json tj;
    tj["windows"] = to_json(rep);
    Json subs = Json::array();
    for (const auto& ms : cells.subsamples) {
      if (ms.tenure != t) continue;
      subs.push_back({{"subgroup", std::string(to_string(ms.subgroup))},
                      {"treat_persons", ms.persons(Group::Treat)},
                      {"control_persons", ms.persons(Group::Control)}});
    }
    tj["subsamples"] = std::move(subs);
    j[std::string(to_string(t))] = std::move(tj);
  }
  st.artifacts.write("match.json", dump(j));
  for (const auto& ms : cells.subsamples) {
    st.artifacts.write("subsample_" + cell_name(ms.tenure, ms.subgroup) + ".csv", subsample_csv(ms, columns));
  }
  st.artifacts.write("event_years.csv", event_year_frequency_csv(cells.subsamples));

  std::string summary;
  for (Subgroup s : kSubgroups) {
    std::vector<MatchedSubsample> row;
    for (const auto& ms : cells.subsamples) {
      if (ms.subgroup == s) row.push_back(ms);
    }
    for (int e : Window::event_times) summary += format_summary_table(row, e, st.cfg.outcome) + "\n";
  }
  st.artifacts.write("subsample_summary.txt", summary);
}

void run_did(RunState& st, const MatchedCells& cells) {
  DidOptions opts;
  opts.outcome = st.cfg.outcome;
  std::map<DidKey, DidResult> results;
  std::string means = "tenure,subgroup,group,event_time,predicted\n";
  std::string last_error;
  for (const auto& ms : cells.subsamples) {
    const std::string file = "did_" + cell_name(ms.tenure, ms.subgroup) + ".json";
    DidResult r;
    try {
      r = fit_did(ms, opts);
    } catch (const EstimationError& ex) {
      // Empty or degenerate cells are reported and skipped.
      last_error = ex.what();
      st.artifacts.write(file, dump(Json{{"tenure", std::string(to_string(ms.tenure))},
                                         {"subgroup", std::string(to_string(ms.subgroup))},
                                         {"treat_persons", ms.persons(Group::Treat)},
                                         {"control_persons", ms.persons(Group::Control)},
                                         {"error", ex.what()}}));
      continue;
    }
    st.artifacts.write(file, dump(to_json(r)));
    const std::string prefix = std::string(to_string(ms.tenure)) + "," + std::string(to_string(ms.subgroup)) + ",";
    std::istringstream lines(predicted_means_csv(r));
    std::string line;
    std::getline(lines, line);
    while (std::getline(lines, line)) means += prefix + line + "\n";
    results.emplace(DidKey{ms.tenure, ms.subgroup}, std::move(r));
  }
  if (results.empty()) throw EstimationError("no matched subsample could be estimated: " + last_error);
  st.artifacts.write("did_tests.txt", format_test_table(parallel_trends_report(results)));
  st.artifacts.write("predicted_means.csv", means);
}

// A failed cell (e.g. separation from a sparse event year) is reported in the
// JSON and left out of the histogram file.
void run_psdiag(RunState& st, const MatchedCells& cells) {
  Json cells_json = Json::array();
  std::string csv = histogram_csv_header();
  for (const auto& ms : cells.subsamples) {
    for (int e : Window::event_times) {
      try {
        const auto a = assess_common_support(ms, e);
        cells_json.push_back(to_json(a));
        csv += histogram_csv_rows(a);
      } catch (const EstimationError& ex) {
        cells_json.push_back({{"tenure", std::string(to_string(ms.tenure))},
                              {"subgroup", std::string(to_string(ms.subgroup))},
                              {"event_time", e},
                              {"error", ex.what()}});
      }
    }
  }
  st.artifacts.write("psdiag.json", dump(cells_json));
  st.artifacts.write("common_support.csv", csv);
}

void verb_ingest(RunState& st) {
  auto res = load_input(st);
  st.dropped_rows["missing_cells"] = res.report.missing_count;
  st.artifacts.write("ingest.json", dump(to_json(res.report)));
  st.artifacts.write("panel.csv", to_csv(res.data));
}

void verb_derive(RunState& st) {
  auto d = load_derived(st);
  st.artifacts.write("derive.json", dump(to_json(d.report)));
  st.artifacts.write("derived.csv", to_csv(d.data));
}

void verb_fe(RunState& st) {
  auto d = load_derived(st);
  FeSpec spec;
  spec.outcome = st.cfg.outcome;
  auto cols = baseline_regressions(d.data, spec);
  const auto keep = st.cfg.tenures();
  std::erase_if(cols, [&](const BaselineColumn& c) {
    return std::find(keep.begin(), keep.end(), c.tenure) == keep.end();
  });
  Json j = Json::array();
  for (const auto& c : cols) {
    Json cj = to_json(c.result);
    cj["tenure"] = std::string(to_string(c.tenure));
    j.push_back(std::move(cj));
    const std::string key = std::string(to_string(c.tenure)) + "_" + std::string(to_string(c.mode));
    st.row_counts["fe_rows_used_" + key] = c.result.rows_used;
    st.dropped_rows["fe_rows_missing_" + key] = c.result.rows_missing;
    st.dropped_rows["fe_singletons_" + key] = c.result.singletons_dropped;
  }
  st.artifacts.write("fe.json", dump(j));
  st.artifacts.write("fe_table.txt", format_baseline_table(cols));
}

void verb_match(RunState& st) {
  auto d = load_derived(st);
  write_match_artifacts(st, build_cells(st, d.data));
}

void verb_did(RunState& st) {
  auto d = load_derived(st);
  run_did(st, build_cells(st, d.data));
}

void verb_psdiag(RunState& st) {
  auto d = load_derived(st);
  run_psdiag(st, build_cells(st, d.data));
}

void verb_pipeline(RunState& st) {
  auto d = load_derived(st);
  st.artifacts.write("derive.json", dump(to_json(d.report)));
  const auto cells = build_cells(st, d.data);
  write_match_artifacts(st, cells);
  run_did(st, cells);
  run_psdiag(st, cells);
}

DgpConfig seeded(const RunConfig& cfg) {
  DgpConfig c = cfg.dgp;
  if (cfg.seed) c.seed = *cfg.seed;
  return c;
}

void verb_simulate(RunState& st) {
  const auto cfg = seeded(st.cfg);
  const auto sim = generate_panel(cfg);
  st.row_counts["rows"] = sim.data.rows();
  st.row_counts["persons"] = sim.data.person_count();
  st.artifacts.write("simulated.csv", to_csv(sim.data));
  std::ostringstream truth;
  truth << "person_id,year,mh0,mh1,treated\n";
  char buf[96];
  for (std::size_t r = 0; r < sim.data.rows(); ++r) {
    std::snprintf(buf, sizeof buf, "%lld,%d,%.17g,%.17g,%d\n",
                  static_cast<long long>(sim.data.person_ids()[r]), sim.data.years()[r], sim.truth.mh0[r],
                  sim.truth.mh1[r], sim.truth.treated[r]);
    truth << buf;
  }
  st.artifacts.write("truth.csv", truth.str());
  Json j;
  j["config"] = Json::object();
  std::istringstream lines(cfg.to_text());
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    j["config"][line.substr(0, eq)] = line.substr(eq + 3);
  }
  j["rows"] = sim.data.rows();
  j["persons"] = sim.data.person_count();
  j["nesting_violations"] = count_nesting_violations(derive_variables(sim.data).data);
  st.artifacts.write("simulate.json", dump(j));
}

void verb_mc(RunState& st) {
  const auto cfg = seeded(st.cfg);
  const auto report = monte_carlo(cfg, st.cfg.reps, parse_mc_pipeline(st.cfg.mc_pipeline));
  st.row_counts["reps"] = report.reps;
  st.row_counts["failed_reps"] = report.failures;
  st.artifacts.write("mc.json", dump(to_json(report)));
  st.artifacts.write("mc.txt", format_mc_report(report));
  st.out << format_mc_report(report);
}

void write_manifest(RunState& st) {
  Json m;
  m["verb"] = st.cfg.verb;
  m["generated_at"] = timestamp_utc();
  m["config_hash"] = hex64(fnv1a(st.cfg.canonical()));
  Json inputs = Json::array();
  if (!st.cfg.input.empty() && st.cfg.verb != "simulate" && st.cfg.verb != "mc") inputs.push_back(st.cfg.input);
  if (!st.cfg.norms.empty()) inputs.push_back(st.cfg.norms);
  m["inputs"] = std::move(inputs);
  m["row_counts"] = st.row_counts;
  m["dropped_rows"] = st.dropped_rows;
  m["artifacts"] = st.artifacts.names();
  st.artifacts.write("manifest.json", dump(m));
}

int fail(std::ostream& err, const char* code, const std::string& msg, int exit_code) {
  std::string one_line = msg;
  for (char& c : one_line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  err << code << ": " << one_line << "\n";
  return exit_code;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Panel estimators, matched DID and a simulator for housing-stress analyses", "hsdid"};
  std::string verb, input, outdir, outcome, tenure, norms, oecd, pipeline, config;
  double income_floor = 0.0;
  std::uint64_t seed = 0;
  std::size_t reps = 0;
  app.add_option("verb", verb, "ingest | derive | fe | match | did | psdiag | simulate | mc | pipeline")
      ->required()
      ->check(CLI::IsMember(kVerbs));
  auto* o_input = app.add_option("--input", input, "Panel CSV");
  auto* o_out = app.add_option("--out", outdir, "Output directory");
  auto* o_outcome = app.add_option("--outcome", outcome, "mcs | mental_health_scale");
  auto* o_tenure = app.add_option("--tenure", tenure, "renter | owner | all");
  auto* o_norms = app.add_option("--norms", norms, "SF-36 norms CSV");
  auto* o_oecd = app.add_option("--oecd-scale", oecd, "modified | original");
  auto* o_floor = app.add_option("--income-floor", income_floor, "Floor before taking logs");
  auto* o_seed = app.add_option("--seed", seed, "Simulator seed");
  auto* o_reps = app.add_option("--reps", reps, "Monte Carlo reps");
  auto* o_pipeline = app.add_option("--pipeline", pipeline, "Monte Carlo pipeline: did | fe");
  auto* o_config = app.add_option("--config", config, "key = value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return fail(err, "E_USAGE", e.what(), kExitInput);
  }

  RunConfig cfg;
  cfg.verb = verb;
  std::unique_ptr<RunState> st;
  try {
    if (*o_config) apply_config_file(cfg, config);
    if (*o_input) cfg.input = input;
    if (*o_out) cfg.out = outdir;
    if (*o_outcome) cfg.outcome = outcome;
    if (*o_tenure) {
      cfg.tenure = tenure;
      if (tenure != "all") cfg.dgp.tenure = parse_tenure(tenure);
    }
    if (*o_norms) cfg.norms = norms;
    if (*o_oecd) cfg.oecd_scale = oecd;
    if (*o_floor) cfg.income_floor = income_floor;
    if (*o_seed) cfg.seed = seed;
    if (*o_reps) cfg.reps = reps;
    if (*o_pipeline) cfg.mc_pipeline = pipeline;
    if (cfg.seed) cfg.dgp.seed = *cfg.seed;
    validate(cfg);

    st = std::make_unique<RunState>(RunState{cfg, Artifacts(cfg.out), {}, {}, out});
    if (verb == "ingest") verb_ingest(*st);
    else if (verb == "derive") verb_derive(*st);
    else if (verb == "fe") verb_fe(*st);
    else if (verb == "match") verb_match(*st);
    else if (verb == "did") verb_did(*st);
    else if (verb == "psdiag") verb_psdiag(*st);
    else if (verb == "simulate") verb_simulate(*st);
    else if (verb == "mc") verb_mc(*st);
    else if (verb == "pipeline") verb_pipeline(*st);
    write_manifest(*st);
    out << verb << ": wrote " << st->artifacts.names().size() << " artifacts to " << cfg.out << "\n";
    return kExitOk;
  } catch (const UsageError& e) {
    if (st) st->artifacts.remove_all();
    return fail(err, "E_USAGE", e.what(), kExitInput);
  } catch (const InputError& e) {
    if (st) st->artifacts.remove_all();
    return fail(err, "E_INPUT", e.what(), kExitInput);
  } catch (const InvariantError& e) {
    if (st) st->artifacts.remove_all();
    return fail(err, "E_INVARIANT", e.what(), kExitInvariant);
  } catch (const EstimationError& e) {
    if (st) st->artifacts.remove_all();
    return fail(err, "E_ESTIMATION", e.what(), kExitEstimation);
  } catch (const fs::filesystem_error& e) {
    if (st) st->artifacts.remove_all();
    return fail(err, "E_INPUT", e.what(), kExitInput);
  } catch (const std::exception& e) {
    if (st) st->artifacts.remove_all();
    return fail(err, "E_ESTIMATION", e.what(), kExitEstimation);
  }
}

}  // namespace hsdid
