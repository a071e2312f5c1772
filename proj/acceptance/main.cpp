// Acceptance suite: one PASS/FAIL line per criterion, exit 0 iff all pass.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"bigraph acceptance suite"};
  bigraph::acceptance::Options opts;
  std::string out;
  app.add_flag("--quick", opts.quick, "reduced sample sizes");
  app.add_option("--seed", opts.master_seed, "master seed");
  app.add_option("--workers", opts.workers, "worker threads (default: BIGRAPH_WORKERS or hardware)");
  app.add_option("--only", opts.only, "criteria to run");
  app.add_option("--out", out, "write the JSON report here");
  CLI11_PARSE(app, argc, argv);

  const auto report = bigraph::acceptance::run(opts, [](const auto& r) {
    std::cout << bigraph::acceptance::format_line(r) << std::endl;
  });
  if (!out.empty()) {
    std::ofstream f(out);
    f << bigraph::acceptance::to_json(report) << '\n';
  }
  std::cout << (report.passed() ? "ALL PASS" : "FAILURES") << std::endl;
  return report.passed() ? 0 : 1;
}
