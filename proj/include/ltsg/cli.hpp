#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ltsg {
struct LstmModel;
}

namespace ltsg::cli {

enum ExitCode : int {
  kOk = 0,
  kError = 1,
  kViolation = 2,
  kUsage = 64,
  kBadModel = 65,
};

/// Runs one invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// FNV-1a hash of the model's outputs on a fixed set of generated windows,
/// rounded to 1e-9. Equal hashes mean equal forward passes.
std::string parity_hash(const LstmModel& model);

}  // namespace ltsg::cli
