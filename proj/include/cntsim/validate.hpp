#pragma once

#include <string>
#include <vector>

namespace cntsim {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in consistency suite: Krylov against dense diagonalization, V = 0
/// factorization and the atomic limit against the closed forms. Runs in seconds.
std::vector<CheckResult> run_validation();

}  // namespace cntsim
