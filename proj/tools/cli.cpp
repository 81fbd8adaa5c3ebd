#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "exitnas/config.hpp"
#include "exitnas/errors.hpp"
#include "exitnas/macmodel.hpp"
#include "exitnas/report.hpp"
#include "exitnas/search.hpp"
#include "exitnas/serialization.hpp"

namespace exitnas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StateError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw StateError(path.string() + " is not valid JSON");
  return j;
}

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> target_macs;
  std::optional<int> iterations;
  std::optional<std::string> evaluator;
  std::vector<std::string> overrides;
  std::string out_dir = "exitnas-run";
  std::optional<int> stop_after;
  bool quiet = false;
};

EngineConfig effective_config(const RunOptions& o) {
  EngineConfig cfg = o.config_path.empty() ? EngineConfig{} : load_config(o.config_path);
  for (const auto& kv : o.overrides) apply_override(cfg, kv);
  if (o.seed) apply_setting(cfg, "seed", *o.seed);
  if (o.target_macs) apply_setting(cfg, "target_macs", *o.target_macs);
  if (o.iterations) apply_setting(cfg, "iterations", *o.iterations);
  if (o.evaluator) apply_setting(cfg, "evaluator", *o.evaluator);
  cfg.validate();
  return cfg;
}

class Run {
public:
  Run(EngineConfig cfg, fs::path out_dir, std::ostream& out, bool quiet)
      : cfg_(std::move(cfg)), dir_(std::move(out_dir)), out_(out), quiet_(quiet) {}

  int execute(SearchState& state, std::optional<int> stop_after, const std::string& started) {
    fs::create_directories(dir_);
    auto evaluator = make_evaluator(cfg_, dir_ / "evaluations");
    SearchHooks hooks;
    hooks.stop_after_iteration = stop_after;
    hooks.on_log = [&](const std::string& msg) { out_ << msg << '\n'; };
    hooks.on_checkpoint = [&](const SearchState& s) {
      json cp = checkpoint_json(s);
      cp["engine"] = to_flat_json(cfg_);
      write_file(dir_ / "checkpoint.json", cp.dump());
      write_file(dir_ / "archive.json", archive_json(archive_document(s)).dump(1));
      if (!quiet_) progress(s);
    };
    write_manifest(state, started, "", evaluator->kind(), "running");
    continue_search(state, *evaluator, hooks);
    write_manifest(state, started, timestamp(), evaluator->kind(),
                   state.finished() ? "complete" : "stopped");
    summary(state);
    return kExitOk;
  }

private:
  void progress(const SearchState& s) {
    auto best = best_entry(s.archive);
    out_ << "iteration " << s.completed_iterations << "/" << s.config.iterations << ": archive "
         << s.archive.size();
    if (best)
      out_ << ", best objective " << std::fixed << std::setprecision(4) << s.archive[*best].objective
           << " (error " << s.archive[*best].measured_error << ", "
           << std::setprecision(3) << s.archive[*best].measured_average_macs / 1e6 << "M MACs)";
    out_ << std::defaultfloat << '\n';
  }

  void summary(const SearchState& s) {
    out_ << "archive: " << s.archive.size() << " entries, " << pareto_front(s.archive).size()
         << " Pareto-optimal, " << s.failed_evaluations << " failed evaluations\n";
    out_ << "wrote " << (dir_ / "archive.json").string() << '\n';
  }

  void write_manifest(const SearchState& s, const std::string& started, const std::string& ended,
                      const std::string& kind, const std::string& status) {
    json m{{"config", to_flat_json(cfg_)},
           {"seed", cfg_.search.seed},
           {"started", started},
           {"ended", ended},
           {"archive_path", (dir_ / "archive.json").string()},
           {"checkpoint_path", (dir_ / "checkpoint.json").string()},
           {"evaluator", kind},
           {"status", status},
           {"completed_iterations", s.completed_iterations}};
    write_file(dir_ / "manifest.json", m.dump(2));
  }

  EngineConfig cfg_;
  fs::path dir_;
  std::ostream& out_;
  bool quiet_;
};

int cmd_search(const RunOptions& o, std::ostream& out) {
  EngineConfig cfg = effective_config(o);
  SearchState state = initial_state(cfg.search, cfg.space);
  fs::create_directories(o.out_dir);
  write_file(fs::path(o.out_dir) / "config.effective", to_config_text(cfg));
  return Run(cfg, o.out_dir, out, o.quiet).execute(state, o.stop_after, timestamp());
}

int cmd_resume(const std::string& checkpoint_path, const std::string& out_dir,
               std::optional<int> stop_after, bool quiet, std::ostream& out) {
  json cp = read_json(checkpoint_path);
  SearchState state = state_from_checkpoint(cp);
  EngineConfig cfg;
  if (auto it = cp.find("engine"); it != cp.end()) {
    try {
      cfg = from_flat_json(*it);
    } catch (const std::exception& e) {
      throw StateError(std::string("corrupted checkpoint: engine: ") + e.what());
    }
    if (!(cfg.search == state.config) || !(cfg.space == state.space))
      throw StateError("checkpoint engine settings disagree with its hashed configuration");
  } else {
    cfg.search = state.config;
    cfg.space = state.space;
  }
  if (state.finished()) {
    out << "run already complete (" << state.completed_iterations << " iterations, "
        << state.archive.size() << " entries); nothing to do\n";
    return kExitOk;
  }
  fs::path dir = out_dir.empty() ? fs::path(checkpoint_path).parent_path() : fs::path(out_dir);
  if (dir.empty()) dir = ".";
  out << "resuming after iteration " << state.completed_iterations << '\n';
  return Run(cfg, dir, out, quiet).execute(state, stop_after, timestamp());
}

std::vector<std::size_t> select_entries(const ArchiveDocument& doc, const std::string& which) {
  if (which == "pareto") return pareto_front(doc.entries);
  if (which == "best") {
    auto b = best_entry(doc.entries);
    return b ? std::vector<std::size_t>{*b} : std::vector<std::size_t>{};
  }
  if (which == "all") {
    std::vector<std::size_t> all(doc.entries.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  std::size_t i = std::stoul(which);
  if (i >= doc.entries.size()) throw ConfigError("--entries: index " + which + " out of range");
  return {i};
}

int cmd_report(const std::string& archive_path, const std::string& kind, const std::string& which,
               const std::string& out_dir, std::ostream& out) {
  ArchiveDocument doc = load_archive(archive_path);
  fs::path dir = out_dir.empty() ? fs::path(archive_path).parent_path() : fs::path(out_dir);
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  if (doc.entries.empty()) {
    out << kEmptyArchiveNotice << '\n';
    write_file(dir / "report-empty.txt", std::string(kEmptyArchiveNotice) + "\n");
    return kExitOk;
  }
  bool all = kind == "all";
  if (all || kind == "pareto") {
    write_file(dir / "pareto.csv", pareto_csv(doc.entries));
    write_file(dir / "pareto.svg", pareto_svg(doc.entries, doc.config.target_macs));
    out << "wrote " << (dir / "pareto.csv").string() << " and pareto.svg\n";
  }
  if (all || kind == "utilization") {
    auto rows = utilization_rows(doc.entries, select_entries(doc, which));
    write_file(dir / "utilization.csv", utilization_csv(rows));
    write_file(dir / "utilization.md", utilization_table(rows));
    out << utilization_table(rows);
  }
  if (all || kind == "macs_breakdown") {
    json reports = json::array();
    std::string text;
    for (std::size_t i : select_entries(doc, which == "pareto" && !all ? "best" : which)) {
      reports.push_back({{"entry", i}, {"breakdown", macs_breakdown_json(doc.entries[i].genome, doc.space)}});
      text += "# entry " + std::to_string(i) + "\n" + macs_breakdown_text(doc.entries[i].genome, doc.space) + "\n";
    }
    write_file(dir / "macs_breakdown.json", reports.dump(1));
    write_file(dir / "macs_breakdown.txt", text);
    if (!all) out << text;
  }
  return kExitOk;
}

int cmd_profile(const std::string& genome_path, std::optional<std::uint64_t> sample_seed,
                const RunOptions& o, bool as_json, std::ostream& out) {
  EngineConfig cfg = effective_config(o);
  Genome g;
  if (!genome_path.empty()) {
    json j = read_json(genome_path);
    try {
      (j.contains("genome") ? j.at("genome") : j).get_to(g);
    } catch (const std::exception& e) {
      throw DecodeError(genome_path + ": " + e.what());
    }
  } else {
    g = sample_genome(cfg.space, sample_seed.value_or(cfg.search.seed));
  }
  auto problems = validate(g, cfg.space);
  if (!problems.empty()) {
    std::string msg = "genome is invalid for the configured search space:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  if (as_json)
    out << macs_breakdown_json(g, cfg.space).dump(2) << '\n';
  else
    out << macs_breakdown_text(g, cfg.space);
  return kExitOk;
}

int cmd_sample(int n, const RunOptions& o, const std::string& out_path, std::ostream& out) {
  if (n < 0) throw ConfigError("-n: must be >= 0");
  EngineConfig cfg = effective_config(o);
  Rng rng(cfg.search.seed);
  std::ostringstream lines;
  for (int i = 0; i < n; ++i) {
    Genome g = sample_genome(cfg.space, rng);
    auto enc = encode(g, cfg.space);
    std::ostringstream id;
    id << std::hex << genome_id(enc);
    lines << json{{"genome_id", id.str()}, {"encoding", enc}, {"genome", g}}.dump() << '\n';
  }
  if (out_path.empty())
    out << lines.str();
  else
    write_file(out_path, lines.str());
  return kExitOk;
}

void add_run_flags(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "Config file (key = value lines)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--target-macs", o.target_macs, "Target average MACs, in millions");
  cmd->add_option("--set", o.overrides, "Override a config key (key=value), repeatable");
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-objective architecture search for early-exit CNNs"};
  app.require_subcommand(1);

  RunOptions search_opts;
  auto* search = app.add_subcommand("search", "Run a search and write archive, checkpoint and manifest");
  add_run_flags(search, search_opts);
  search->add_option("--evaluator", search_opts.evaluator, "synthetic | external:<path>");
  search->add_option("--out-dir", search_opts.out_dir, "Output directory");
  search->add_option("--iterations", search_opts.iterations, "Number of search iterations");
  search->add_option("--stop-after", search_opts.stop_after, "Stop after this iteration (resumable)");
  search->add_flag("--quiet", search_opts.quiet, "Only print the summary");

  std::string checkpoint_path, resume_dir;
  std::optional<int> resume_stop;
  bool resume_quiet = false;
  auto* resume = app.add_subcommand("resume", "Continue a search from its checkpoint");
  resume->add_option("checkpoint", checkpoint_path, "checkpoint.json")->required();
  resume->add_option("--out-dir", resume_dir, "Output directory (default: checkpoint directory)");
  resume->add_option("--stop-after", resume_stop, "Stop after this iteration");
  resume->add_flag("--quiet", resume_quiet, "Only print the summary");

  std::string archive_path, report_kind = "all", report_entries = "pareto", report_dir;
  auto* report = app.add_subcommand("report", "Regenerate reports from an archive");
  report->add_option("archive", archive_path, "archive.json")->required();
  report->add_option("--kind", report_kind, "pareto | utilization | macs_breakdown | all")
      ->check(CLI::IsMember({"pareto", "utilization", "macs_breakdown", "all"}));
  report->add_option("--entries", report_entries, "pareto | best | all | <index>");
  report->add_option("--out-dir", report_dir, "Output directory (default: archive directory)");

  RunOptions profile_opts;
  std::string genome_path;
  std::optional<std::uint64_t> sample_seed;
  bool profile_json = false;
  auto* prof = app.add_subcommand("profile", "Per-layer MAC audit of one genome");
  add_run_flags(prof, profile_opts);
  prof->add_option("--genome", genome_path, "Genome JSON (or an archive entry)");
  prof->add_option("--sample-seed", sample_seed, "Profile a random genome drawn with this seed");
  prof->add_flag("--json", profile_json, "Emit JSON");

  RunOptions sample_opts;
  int sample_n = 10;
  std::string sample_out;
  auto* sample = app.add_subcommand("sample", "Dump random genomes as JSON lines");
  add_run_flags(sample, sample_opts);
  sample->add_option("-n,--count", sample_n, "Number of genomes");
  sample->add_option("--out", sample_out, "Output file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfigError;
  }

  try {
    if (*search) return cmd_search(search_opts, out);
    if (*resume) return cmd_resume(checkpoint_path, resume_dir, resume_stop, resume_quiet, out);
    if (*report) return cmd_report(archive_path, report_kind, report_entries, report_dir, out);
    if (*prof) return cmd_profile(genome_path, sample_seed, profile_opts, profile_json, out);
    if (*sample) return cmd_sample(sample_n, sample_opts, sample_out, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const EvaluatorUnavailable& e) {
    err << "evaluator failure: " << e.what() << '\n';
    return kExitEvaluatorFailure;
  } catch (const StateError& e) {
    err << "refusing to resume: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

} // namespace exitnas::cli
