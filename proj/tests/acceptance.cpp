// Runs the built-in verification suite and prints one line per acceptance
// criterion. Exit status is non-zero when any criterion fails.
#include <cstdio>
#include <iostream>

#include "extremal/io.hpp"
#include "extremal/verify.hpp"

int main() {
  const extremal::VerificationReport rep = extremal::run_builtin_suite();
  int index = 0;
  for (const extremal::CheckResult& c : rep.checks) {
    std::printf("criterion %2d %-28s %s  measured=%s tol=%s time=%.3fs\n", ++index, c.name.c_str(),
                c.pass ? "PASS" : "FAIL", extremal::format_double(c.measured).c_str(),
                extremal::format_double(c.tolerance).c_str(), c.seconds);
    if (!c.pass) std::printf("    %s\n", c.detail.c_str());
  }
  std::printf("%s\n", rep.passed() ? "ALL PASS" : "SOME CRITERIA FAILED");
  return rep.passed() ? 0 : 1;
}
