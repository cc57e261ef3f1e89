#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace af {

/// Seeded faults for mutation-testing the verification suite. Injecting
/// one must make `run_verify` fail at the check that guards against it.
/// Never set outside tests and the CLI's --inject-fault flag.
enum class Fault {
  None,
  AnchorGradSign,  // flips the sign of the anchor-alignment gradient
  SigmaSchedule,   // linear schedule silently becomes sigma = t^2
  SharedRng,       // derive_noise regresses to one shared mutable generator
};

void set_fault(Fault fault);
Fault current_fault();
std::optional<Fault> parse_fault(const std::string& name);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_pass = true;
  const VerifyCheck* first_failure() const;
};

/// Run every module invariant suite: schedule and integrator identities,
/// oracle equivalences, the anchor-objective identities, gradient checks,
/// identity-edit invariance, RNG determinism, serialization stability.
VerifyReport run_verify(std::ostream* progress = nullptr);

/// One line per check; returns 0 iff everything passed.
int write_verify_report(const VerifyReport& report, std::ostream& out);

}  // namespace af
