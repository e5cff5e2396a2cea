// certbound: command-line front end (run, bench, check).

#include "certbound/error.hpp"
#include "certbound/optimizer.hpp"
#include "certbound/parser.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace certbound;

namespace {

// Exit status contract; see README.
constexpr int kExitOk = 0;
int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Parse: return 2;
    case ErrorCategory::Domain: return 3;
    case ErrorCategory::Budget: return 4;
    case ErrorCategory::Certification: return 5;
    case ErrorCategory::Numerical: return 6;
    case ErrorCategory::Usage: return 64;
  }
  return 1;
}

int report_error(ErrorCategory c, const std::string& what) {
  std::cerr << "error[" << to_string(c) << "]: " << what << '\n';
  return exit_code(c);
}

struct Flags {
  std::optional<unsigned> order;
  std::optional<double> target;
  std::optional<std::size_t> max_boxes;
  std::optional<std::size_t> control_points;
  std::optional<std::size_t> template_threshold;
  std::optional<std::string> mode;
  std::optional<double> tol;
  std::optional<unsigned> jobs;
  std::optional<std::uint64_t> seed;
  bool no_target = false;
};

void add_config_flags(CLI::App& app, Flags& f) {
  app.add_option("--order", f.order, "relaxation order k (default 1)");
  app.add_option("--target", f.target, "lower bound to prove (default: the problem's goal)");
  app.add_flag("--no-target", f.no_target, "ignore the problem's goal and just bound the minimum");
  app.add_option("--max-boxes", f.max_boxes, "box budget (default 200)");
  app.add_option("--control-points", f.control_points, "initial control points (default 1)");
  app.add_option("--template-threshold", f.template_threshold, "lifting count that triggers templates (default 6)");
  app.add_option("--mode", f.mode, "numeric | certified | ia_sos (default numeric)");
  app.add_option("--tol", f.tol, "SDP tolerance (default 1e-8)");
  app.add_option("--jobs", f.jobs, "box-level worker threads (default 1)");
  app.add_option("--seed", f.seed, "seed for sampling and descent starts (default 0)");
}

RunConfig resolve(const Flags& f, const Problem& p, RunConfig cfg = {}) {
  if (p.goal) cfg.target = p.goal->get_d();
  if (f.order) cfg.order = *f.order;
  if (f.target) cfg.target = *f.target;
  if (f.no_target) cfg.target.reset();
  if (f.max_boxes) cfg.max_boxes = *f.max_boxes;
  if (f.control_points) cfg.control_points = *f.control_points;
  if (f.template_threshold) cfg.template_threshold = *f.template_threshold;
  if (f.mode) cfg.mode = parse_mode(*f.mode);
  if (f.tol) cfg.tol = *f.tol;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.seed) cfg.seed = *f.seed;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::Usage, "cannot write '" + path + "'");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::Usage, "cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// --- run -------------------------------------------------------------------

struct RunArgs {
  std::string problem;
  Flags flags;
  std::string report;
  std::string cert_dir;
  bool timing = false;
};

int cmd_run(const RunArgs& a) {
  const Problem p = load_problem(a.problem);
  const RunConfig cfg = resolve(a.flags, p);
  BoundReport r = certify_bound(p.objective, p.box, cfg, fs::path(a.problem).filename().string());
  if (!a.report.empty()) write_text(a.report, format_report(r, a.timing));

  std::cout << "status " << r.status << "\nglobal_bound " << fmt(r.global_bound, "%.10g") << "\nboxes "
            << r.box_count() << "\nmax_lifting " << r.max_lifting() << "\nmax_control_points "
            << r.max_control_points() << '\n';
  if (a.timing) std::cout << "time " << fmt(r.wall_seconds, "%.3f") << "s\n";

  if (cfg.mode == Mode::Certified) {
    const std::string dir = a.cert_dir.empty() ? "certificates" : a.cert_dir;
    write_certificates(r, dir);
    const auto check = check_estimator_certificates(r, dir);
    std::cout << "certificates " << check.checked << ' ' << to_string(check.verdict) << " (" << dir << ")\n";
    if (check.verdict == Verdict::Invalid)
      return report_error(ErrorCategory::Certification,
                          std::to_string(check.invalid.size()) + " certificate(s) failed the exact check");
  }
  if (r.status == "failure")
    return report_error(ErrorCategory::Budget, "target " + fmt(*cfg.target, "%.10g") + " not proved within " +
                                                   std::to_string(cfg.max_boxes) + " boxes");
  return kExitOk;
}

// --- bench -----------------------------------------------------------------

// Suite file: one row per line, "<name> <problem file> [run flags...]",
// problem paths relative to the suite file; '#' starts a comment.
struct SuiteRow {
  std::string name;
  std::string problem;
  std::vector<std::string> args;
};

std::vector<SuiteRow> read_suite(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<SuiteRow> rows;
  const fs::path base = fs::path(path).parent_path();
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    SuiteRow row;
    if (!(ls >> row.name)) continue;
    if (!(ls >> row.problem)) throw ParseError("suite row without a problem file", line_no, 1);
    row.problem = (base / row.problem).string();
    for (std::string w; ls >> w;) row.args.push_back(w);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct Cell {
  bool ok = false;
  std::string boxes = "-";
  std::string time = "-";
  std::string lifting = "-";
  std::string points = "-";
};

Cell bench_cell(const Problem& p, const RunConfig& cfg) {
  Cell c;
  try {
    const auto t0 = std::chrono::steady_clock::now();
    const BoundReport r = certify_bound(p.objective, p.box, cfg);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.ok = r.status != "failure";
    c.boxes = std::to_string(r.box_count()) + (c.ok ? "" : "!");
    c.time = fmt(s, "%.2fs");
    c.lifting = std::to_string(r.max_lifting());
    c.points = std::to_string(r.max_control_points());
  } catch (const Error& e) {
    c.boxes = "error[" + std::string(to_string(e.category())) + "]";
  }
  return c;
}

int cmd_bench(const std::string& suite, bool baseline) {
  const auto rows = read_suite(suite);
  std::printf("%-10s %3s %12s %2s %3s %9s %8s %9s %8s %9s\n", "problem", "n", "m", "k", "#s", "n_lifting",
              "#boxes", "time", "ia_boxes", "ia_time");
  for (const auto& row : rows) {
    std::string n = "-", m = "-", k = "-";
    Cell templ, ia;
    try {
      const Problem p = load_problem(row.problem);
      CLI::App app;
      Flags f;
      add_config_flags(app, f);
      std::vector<std::string> args(row.args.rbegin(), row.args.rend());
      app.parse(args);
      RunConfig cfg = resolve(f, p);
      n = std::to_string(p.box.dim());
      m = cfg.target ? fmt(*cfg.target) : "none";
      k = std::to_string(cfg.order);
      if (cfg.mode == Mode::IaSos) cfg.mode = Mode::Numeric;
      templ = bench_cell(p, cfg);
      if (baseline) {
        cfg.mode = Mode::IaSos;
        ia = bench_cell(p, cfg);
      }
    } catch (const CLI::Error& e) {
      templ.boxes = "error[usage]";
    } catch (const Error& e) {
      templ.boxes = "error[" + std::string(to_string(e.category())) + "]";
    }
    std::printf("%-10s %3s %12s %2s %3s %9s %8s %9s %8s %9s\n", row.name.c_str(), n.c_str(), m.c_str(), k.c_str(),
                templ.points.c_str(), templ.lifting.c_str(), templ.boxes.c_str(), templ.time.c_str(),
                ia.boxes.c_str(), ia.time.c_str());
    std::fflush(stdout);
  }
  return kExitOk;
}

// --- check -----------------------------------------------------------------

int cmd_check(const std::vector<std::string>& files, const std::string& report, const std::string& dir) {
  bool all_valid = true;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw Error(ErrorCategory::Usage, "cannot read '" + f + "'");
    const SOSCertificate c = read_certificate(in);
    const CertificateCheck res = check_certificate(c);
    std::cout << f << ": " << to_string(res.verdict);
    if (!res.reason.empty()) std::cout << " (" << res.reason << ')';
    std::cout << '\n';
    all_valid = all_valid && res.verdict == Verdict::Valid;
  }
  if (!report.empty()) {
    const BoundReport r = parse_report(read_text(report));
    const auto res = check_estimator_certificates(r, dir.empty() ? "certificates" : dir);
    std::cout << report << ": " << res.checked << " certificate(s), " << to_string(res.verdict) << '\n';
    for (const auto& name : res.invalid) std::cout << "  invalid: " << name << '\n';
    all_valid = all_valid && res.verdict != Verdict::Invalid;
  }
  if (!all_valid) return report_error(ErrorCategory::Certification, "at least one certificate is invalid");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certbound: certified lower bounds for nonlinear box problems"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "certify a lower bound for one problem file");
  run_cmd->add_option("problem", run.problem, "problem file")->required();
  add_config_flags(*run_cmd, run.flags);
  run_cmd->add_option("--report", run.report, "write the structured report here");
  run_cmd->add_option("--cert-dir", run.cert_dir, "certificate directory (certified mode, default ./certificates)");
  run_cmd->add_flag("--timing", run.timing, "include wall time in the report");

  std::string suite;
  bool no_baseline = false;
  auto* bench_cmd = app.add_subcommand("bench", "run a suite and print a comparison table");
  bench_cmd->add_option("suite", suite, "suite file")->required();
  bench_cmd->add_flag("--no-baseline", no_baseline, "skip the ia_sos column");

  std::vector<std::string> files;
  std::string report, cert_dir;
  auto* check_cmd = app.add_subcommand("check", "exactly re-check certificate files");
  check_cmd->add_option("certificates", files, "certificate files");
  check_cmd->add_option("--report", report, "check every certificate a report references");
  check_cmd->add_option("--cert-dir", cert_dir, "directory holding the report's certificates");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(ErrorCategory::Usage, e.what());
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*bench_cmd) return cmd_bench(suite, !no_baseline);
    if (*check_cmd) return cmd_check(files, report, cert_dir);
  } catch (const Error& e) {
    return report_error(e.category(), e.what());
  } catch (const std::exception& e) {
    return report_error(ErrorCategory::Numerical, e.what());
  }
  return kExitOk;
}
