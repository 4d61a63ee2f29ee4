// One pass/fail line per acceptance criterion; exits nonzero if any fails.
#include <cstdlib>
#include <iostream>
#include <string>

#include "pointsource/harness/checks.hpp"

int main(int argc, char** argv) {
  ps::SuiteOptions opt;
  if (argc > 1) opt.iterations = std::atoi(argv[1]);
  opt.log = &std::cerr;
  int failed = 0;
  ps::run_acceptance(opt, [&](const ps::CheckResult& r) {
    std::cout << ps::format_check(r) << std::endl;
    failed += !r.passed;
  });
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion/criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
