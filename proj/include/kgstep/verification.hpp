#pragma once

// Verification suite: module invariants and the acceptance criteria, each run
// as a named check that reports pass/fail with a one-line detail.

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace kgstep {

/// Deliberate defects for mutation testing of the suite itself.
enum class Injection {
  None,
  /// Choose the opposite sign of p' in every oscillatory regime.
  FlipBranch,
  /// Run packet simulations at twice the stability bound with the guard off.
  UnstableDt,
};

std::string_view to_string(Injection injection);
/// "none", "flip-branch" or "unstable-dt"; throws ConfigError otherwise.
Injection parse_injection(std::string_view text);

inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct VerifyOptions {
  std::uint64_t seed = kDefaultSeed;
  std::size_t jobs = 1;
  Injection injection = Injection::None;
  /// Name prefixes to run ("acceptance.", "analytic.current_balance"); empty runs all.
  std::vector<std::string> checks;
};

struct CheckResult {
  std::string name;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyReport {
  std::uint64_t seed = kDefaultSeed;
  Injection injection = Injection::None;
  std::vector<CheckResult> results;

  bool all_passed() const;
  std::vector<std::string> failed() const;
};

struct CheckInfo {
  std::string_view name;
  std::string_view title;
};
std::vector<CheckInfo> list_checks();

/// Runs the selected checks on up to options.jobs threads. on_result fires in
/// check order as results become available. Throws ConfigError when a filter
/// matches no check.
VerifyReport run_verification(const VerifyOptions& options,
                              const std::function<void(const CheckResult&)>& on_result = {});

/// "PASS  name  title  (1.23 s)  detail"
std::string format_result_line(const CheckResult& result);

void write_summary_json(std::ostream& out, const VerifyReport& report);

}  // namespace kgstep
