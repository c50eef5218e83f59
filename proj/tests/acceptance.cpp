// Acceptance suite: runs every verification criterion at its pinned tolerance
// and prints one pass/fail line per criterion. Exit code 0 only if all pass.

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "btq/verify.hpp"

int main(int argc, char** argv) {
  btq::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
      opt.seed = std::strtoull(argv[++i], nullptr, 10);
    else if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc)
      opt.workers = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: acceptance [--seed N] [--workers N]\n");
      return 2;
    }
  }

  int failures = 0;
  const auto results = btq::run_acceptance(opt, [&](const btq::CriterionResult& r) {
    std::printf("[%s] criterion %02d: %s (observed %.3e, tolerance %.3e)\n",
                r.pass ? "PASS" : "FAIL", r.index, r.name.c_str(), r.observed, r.tolerance);
    if (!r.detail.empty()) std::printf("       %s\n", r.detail.c_str());
    std::fflush(stdout);
  });
  for (const auto& r : results) failures += r.pass ? 0 : 1;
  std::printf("%zu criteria, %d failed\n", results.size(), failures);
  return failures == 0 ? 0 : 1;
}
