// Command-line front end: run, verify and sweep experiment configs.

#include <CLI11.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <iostream>
#include <string>

#include "oadp/config.hpp"
#include "oadp/experiment.hpp"

namespace {

void print_summary(const oadp::RunReport& rep, std::ostream& os) {
  os << (rep.passed() ? "PASS " : "FAIL ") << rep.command << ' ' << rep.name << "  ["
     << rep.directory.string() << "]\n";
  if (rep.json.contains("result")) {
    const auto& r = rep.json["result"];
    os << "  iterations " << r["iterations"] << ", converged " << r["converged"];
    if (!r["final_k_error"].is_null()) os << ", K error " << r["final_k_error"];
    if (!r["final_p_error"].is_null()) os << ", P error " << r["final_p_error"];
    os << '\n';
  }
  if (rep.json.contains("rank_report")) {
    for (const auto& c : rep.json["rank_report"]["conditions"])
      os << "  rank " << c["name"].get<std::string>() << ": " << c["achieved"] << '/'
         << c["required"] << (c["satisfied"].get<bool>() ? "" : "  (deficient)") << '\n';
  }
  for (const auto& c : rep.checks)
    os << "  [" << (c.passed ? "ok" : "FAILED") << "] " << c.name << ": " << c.detail << '\n';
}

void print_oracle(const oadp::RunReport& rep, std::ostream& os) {
  if (!rep.json.contains("oracle")) return;
  const auto& o = rep.json["oracle"];
  const Eigen::IOFormat fmt(6, 0, ", ", "\n", "    [", "]");
  auto dump = [&](const char* label, const oadp::Json& m) {
    oadp::Matrix a(static_cast<oadp::Index>(m.size()),
                   m.empty() ? 0 : static_cast<oadp::Index>(m[0].size()));
    for (oadp::Index i = 0; i < a.rows(); ++i)
      for (oadp::Index j = 0; j < a.cols(); ++j)
        a(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    os << "  " << label << " =\n" << a.format(fmt) << '\n';
  };
  dump("P*", o["P_star"]);
  dump("K*", o["K_star"]);
  dump("L", o["L"]);
  dump("M", o["M"]);
}

std::filesystem::path resolve_dir(const std::string& out, const oadp::ExperimentConfig& c) {
  const std::filesystem::path root = out.empty() ? oadp::output_root() : std::filesystem::path(out);
  return root / c.output_dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Output-feedback ADP experiments for continuous-time LQR"};
  app.require_subcommand(1);

  std::string config_path, sweep_dir, out;
  int jobs = 1;
  bool sweep_verify = false;

  auto* run = app.add_subcommand("run", "Run the configured pipeline");
  run->add_option("config", config_path, "Experiment config (YAML)")->required();
  run->add_option("--out", out, "Output root (default: $OADP_OUTPUT_ROOT or ./runs)");

  auto* verify = app.add_subcommand("verify", "Check model-dependent invariants");
  verify->add_option("config", config_path, "Experiment config (YAML)")->required();
  verify->add_option("--out", out, "Output root (default: $OADP_OUTPUT_ROOT or ./runs)");

  auto* sweep = app.add_subcommand("sweep", "Run every config in a directory");
  sweep->add_option("dir", sweep_dir, "Directory of configs")->required();
  sweep->add_option("--jobs,-j", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "Output root (default: $OADP_OUTPUT_ROOT or ./runs)");
  sweep->add_flag("--verify", sweep_verify, "Run verify instead of run");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *verify) {
      const oadp::ExperimentConfig c = oadp::load_config(config_path);
      const auto dir = resolve_dir(out, c);
      const oadp::RunReport rep =
          *run ? oadp::run_experiment(c, dir) : oadp::verify_experiment(c, dir);
      if (c.algorithm == "oracle-only" || *verify) print_oracle(rep, std::cout);
      print_summary(rep, std::cout);
      return rep.passed() ? 0 : 1;
    }
    const std::filesystem::path root = out.empty() ? oadp::output_root() : std::filesystem::path(out);
    const auto reports = oadp::sweep_experiments(sweep_dir, jobs, root, sweep_verify);
    bool all = true;
    for (const auto& r : reports) {
      print_summary(r, std::cout);
      all = all && r.passed();
    }
    std::cout << (all ? "sweep passed" : "sweep FAILED") << " (" << reports.size() << " configs)\n";
    return all ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
