#ifndef ECG_CLI_RUN_H_
#define ECG_CLI_RUN_H_

#include <string>
#include <vector>

namespace ecg {

// Entry point of the `ecg` tool. `args` excludes the program name.
// Returns 0 on success, 1 on runtime failure, 2 on usage errors.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

std::string version_string();

}  // namespace ecg

#endif  // ECG_CLI_RUN_H_
