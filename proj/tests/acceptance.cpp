#include <CLI11.hpp>

#include <iostream>
#include <vector>

#include "decaylab/verify.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria, one line per criterion"};
  std::vector<int> only;
  unsigned threads = 0;
  app.add_option("--criterion", only, "Criteria to run (default all)")->check(CLI::Range(1, 13));
  app.add_option("--threads", threads, "Worker threads for ensembles");
  CLI11_PARSE(app, argc, argv);

  decaylab::VerifyOptions opt;
  opt.only = only;
  opt.threads = threads;
  const decaylab::VerifyReport report = decaylab::run_verify_suite(opt);
  for (const auto& r : report.criteria) std::cout << decaylab::result_line(r) << "\n";
  return report.all_passed() ? 0 : 1;
}
