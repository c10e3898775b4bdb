// nlqm command-line driver: simulate | scan | table | selftest.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nlqm/config.hpp"
#include "nlqm/integrate.hpp"
#include "nlqm/measure.hpp"
#include "nlqm/selftest.hpp"
#include "nlqm/stability.hpp"

namespace {

using namespace nlqm;
using json = nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kBlowUp = 3,
  kSelftestFailed = 4,
  kIoError = 5,
  kInterrupted = 130,
};

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string opt_num(const std::optional<double>& x) { return x ? short_num(*x) : "-"; }

// All output funnels through here: the whole file is built in memory and
// written once by the main thread.
void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path + "' failed");
}

std::string sibling(const std::string& path, const std::string& ext) {
  std::filesystem::path p(path);
  p.replace_extension(ext);
  return p.string();
}

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<unsigned> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string trials_path;
  bool quiet = false;
};

RunConfig resolve(Command cmd, const CommonArgs& a) {
  RunConfig c;
  c.command = cmd;
  if (!a.config_path.empty()) load_file(c, a.config_path);
  for (const auto& s : a.sets) apply_assignment(c, s);
  if (a.jobs) c.jobs = *a.jobs;
  if (a.seed) c.scheme.seed = *a.seed;
  if (a.out) c.out = *a.out;
  c.validate();
  return c;
}

int cmd_simulate(const RunConfig& c) {
  const Model model(c.model);
  const auto t0 = std::chrono::steady_clock::now();
  const StateVector init = initial_state(c.model, model.basis());
  const Trajectory traj = evolve(init, c.integ, model);
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::string csv = metadata_line(c) + "\nt,S,density\n";
  for (const auto& s : traj.samples)
    for (std::size_t l = 0; l < s.density.size(); ++l)
      csv += num(s.t) + ',' + num(traj.spin_values[l]) + ',' + num(s.density[l]) + '\n';
  write_text(c.out, csv);

  const Sample& first = traj.initial();
  const Sample& last = traj.final();
  const auto reg = classify(last.state, model.basis());
  json series = json::array();
  double norm_drift = 0.0, energy_drift = 0.0, ext_drift = 0.0, max_div = 0.0;
  for (const auto& s : traj.samples) {
    series.push_back({{"t", s.t},
                      {"norm", s.norm},
                      {"energy", s.energy},
                      {"force", s.force},
                      {"divergence", s.divergence},
                      {"overlap", s.overlap},
                      {"extended_energy", s.extended_energy}});
    norm_drift = std::max(norm_drift, std::abs(s.norm - first.norm));
    energy_drift = std::max(energy_drift, std::abs(s.energy - first.energy));
    ext_drift = std::max(ext_drift, std::abs(s.extended_energy - first.extended_energy));
    max_div = std::max(max_div, s.divergence);
  }
  json diag = {{"command", "simulate"},
               {"config_hash", config_hash(c)},
               {"seed", c.scheme.seed},
               {"method", to_string(c.integ.method)},
               {"steps", c.integ.steps},
               {"step_size", c.integ.step_size()},
               {"runtime_seconds", runtime},
               {"max_norm_drift", norm_drift},
               {"max_energy_drift", energy_drift},
               {"max_extended_energy_drift", ext_drift},
               {"max_divergence", max_div},
               {"final",
                {{"t", last.t},
                 {"left_density", reg.left},
                 {"right_density", reg.right},
                 {"outcome", to_string(reg.outcome)},
                 {"force", last.force}}},
               {"series", series}};
  json settings = json::object();
  for (const auto& [k, v] : canonical_settings(c)) settings[k] = v;
  diag["settings"] = settings;
  if (!c.out.empty() && c.out != "-") write_text(sibling(c.out, ".json"), diag.dump(2) + '\n');
  return kOk;
}

int cmd_scan(const RunConfig& c) {
  std::vector<std::optional<ScanResult>> results(c.scan_pairs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < results.size();) {
      if (g_cancel.load()) return;
      try {
        ModelParams p = c.model;
        p.q = c.scan_pairs[i].q;
        p.height = c.scan_pairs[i].height;
        results[i] = threshold_scan(p, initial_state(p, build_basis(p.q)), c.scan);
      } catch (...) {
        std::lock_guard lock(fail_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  {
    const unsigned n = std::max(1u, std::min<unsigned>(c.jobs, static_cast<unsigned>(results.size())));
    std::vector<std::jthread> pool;
    for (unsigned j = 1; j < n; ++j) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  std::string csv = metadata_line(c) + "\nq,height,w_threshold,w_threshold_unscaled_cut,w_threshold_scaled_cut,scale\n";
  bool complete = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) {
      complete = false;
      break;
    }
    const auto& r = *results[i];
    csv += std::to_string(c.scan_pairs[i].q) + ',' + short_num(c.scan_pairs[i].height) + ',' +
           opt_num(r.sign_threshold) + ',' + opt_num(r.unscaled_cut_threshold) + ',' +
           opt_num(r.scaled_cut_threshold) + ',' + short_num(r.scale) + '\n';
  }
  if (!complete) csv += "# interrupted\n";
  write_text(c.out, csv);
  return complete ? kOk : kInterrupted;
}

int cmd_table(const RunConfig& c, const std::string& trials_path) {
  const auto res = monte_carlo(c.model, c.scheme, c.reps, c.integ, c.jobs, &g_cancel);
  const auto& row = res.row;
  std::string csv = metadata_line(c) + "\nReps,Rand,sigma_or_delta,LRs,RRs,NDs,BP,SP\n";
  csv += std::to_string(row.reps) + ',' + to_string(row.kind) + ',' + short_num(row.magnitude) + ',' +
         std::to_string(row.lrs) + ',' + std::to_string(row.rrs) + ',' + std::to_string(row.nds) + ',' +
         short_num(row.bp) + ',' + opt_num(row.sp()) + '\n';
  csv += "# errors=" + std::to_string(row.errors) + '\n';
  if (res.cancelled)
    csv += "# interrupted after " + std::to_string(res.trials.size()) + " of " + std::to_string(c.reps) + " trials\n";
  write_text(c.out, csv);

  if (!trials_path.empty()) {
    std::string log = metadata_line(c) + "\nindex,seed,outcome,left_density,right_density,final_force,energy_drift,error\n";
    for (const auto& t : res.trials)
      log += std::to_string(t.index) + ',' + std::to_string(t.seed) + ',' + to_string(t.outcome) + ',' +
             num(t.left_density) + ',' + num(t.right_density) + ',' + num(t.final_force) + ',' +
             num(t.energy_drift) + ',' + t.error + '\n';
    write_text(trials_path, log);
  }
  return res.cancelled ? kInterrupted : kOk;
}

int cmd_selftest(const RunConfig& c, bool quiet) {
  SelftestOptions opt;
  opt.jobs = c.jobs;
  const auto rep = run_selftest(opt);
  std::ostringstream os;
  for (const auto& k : rep.checks) {
    os << (k.pass ? "PASS " : "FAIL ") << k.suite << ": " << k.name << "  value=" << k.value
       << " tol=" << k.tolerance;
    if (!k.detail.empty()) os << "  (" << k.detail << ')';
    os << '\n';
  }
  os << (rep.passed() ? "selftest: all checks passed\n"
                      : "selftest: " + std::to_string(rep.failures()) + " check(s) failed\n");
  if (!quiet || !rep.passed()) write_text(c.out, os.str());
  return rep.passed() ? kOk : kSelftestFailed;
}

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config_path, "key=value config file")->check(CLI::ExistingFile);
  sub->add_option("--set", a.sets, "override one key (key=value); repeatable")->take_all();
  sub->add_option("--jobs", a.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--seed", a.seed, "base seed (trial i uses seed + i)");
  sub->add_option("--out", a.out, "output path ('-' for stdout)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear quantum measurement model driver"};
  app.require_subcommand(1);
  CommonArgs args;
  auto* sim = app.add_subcommand("simulate", "evolve one state; CSV t,S,density plus JSON diagnostics");
  auto* scan = app.add_subcommand("scan", "w threshold per (q, height) pair");
  auto* table = app.add_subcommand("table", "Monte Carlo registration counts");
  auto* self = app.add_subcommand("selftest", "built-in validation suites");
  for (auto* s : {sim, scan, table, self}) add_common(s, args);
  table->add_option("--trials", args.trials_path, "per-trial CSV log");
  self->add_flag("--quiet", args.quiet, "print only on failure");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  std::signal(SIGINT, on_sigint);
  try {
    if (sim->parsed()) return cmd_simulate(resolve(Command::Simulate, args));
    if (scan->parsed()) return cmd_scan(resolve(Command::Scan, args));
    if (table->parsed()) return cmd_table(resolve(Command::Table, args), args.trials_path);
    return cmd_selftest(resolve(Command::Selftest, args), args.quiet);
  } catch (const BlowUpError& e) {
    std::cerr << "nlqm: " << e.what() << '\n';
    return kBlowUp;
  } catch (const Error& e) {
    std::cerr << "nlqm: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Config:
      case ErrorKind::Precondition:
      case ErrorKind::DimensionLimit:
      case ErrorKind::DegenerateState:
        return kConfigError;
      case ErrorKind::Io: return kIoError;
      case ErrorKind::BlowUp: return kBlowUp;
      default: return kFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "nlqm: " << e.what() << '\n';
    return kFailure;
  }
}
