// Acceptance criteria 1-8: one PASS/FAIL line each, exit 0 iff all pass.
// Usage: acceptance [--seed N] [--jobs N]

#include <cstdlib>
#include <iostream>
#include <string>

#include "kgstep/verification.hpp"

int main(int argc, char** argv) {
  kgstep::VerifyOptions options;
  options.checks = {"acceptance."};
  for (int i = 1; i < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--help" || flag == "-h") {
      std::cout << "usage: acceptance [--seed N] [--jobs N]\n";
      return 0;
    }
    if (i + 1 == argc) {
      std::cerr << "flag " << flag << " needs a value\n";
      return 2;
    }
    if (flag == "--seed") {
      options.seed = std::strtoull(argv[i + 1], nullptr, 10);
    } else if (flag == "--jobs") {
      options.jobs = std::strtoull(argv[i + 1], nullptr, 10);
    } else {
      std::cerr << "unknown flag " << flag << '\n';
      return 2;
    }
  }
  std::cout << "acceptance criteria, seed=" << options.seed << std::endl;
  const kgstep::VerifyReport report = kgstep::run_verification(
      options, [](const kgstep::CheckResult& r) { std::cout << kgstep::format_result_line(r) << std::endl; });
  const auto failed = report.failed();
  std::cout << report.results.size() - failed.size() << "/" << report.results.size() << " criteria passed"
            << std::endl;
  return failed.empty() ? 0 : 1;
}
