// Acceptance gate: runs the ten release criteria and prints one line each.
// Exit status is 0 only when every criterion passes.
//
// Usage: bosecone_acceptance [--criterion N] [--threads N]

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <vector>

#include "criteria.hpp"

int main(int argc, char** argv) {
  int only = 0;
  int threads = 1;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      threads = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N] [--threads N]\n", argv[0]);
      return 2;
    }
  }

  using namespace bosecone::acceptance;
  std::vector<CriterionResult> results;
  try {
    if (only != 0) {
      results.push_back(run_criterion(only, threads));
    } else {
      results = run_all(threads);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance run aborted: %s\n", e.what());
    return 2;
  }

  int failed = 0;
  double total = 0.0;
  for (const CriterionResult& r : results) {
    std::printf("%s\n", format_line(r).c_str());
    if (!r.pass) ++failed;
    total += r.seconds;
  }
  std::printf("%d/%zu criteria passed (%.2f s total)\n",
              static_cast<int>(results.size()) - failed, results.size(), total);
  return failed == 0 ? 0 : 1;
}
