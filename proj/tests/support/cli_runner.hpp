#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <sys/wait.h>

namespace testsupport {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

// Run the CLI with the working directory set to `cwd`, capturing stdout and
// redirecting stderr to `stderr_path` (discarded by default).
inline CliResult run_cli(const std::string& args, const std::string& cwd,
                         const std::string& stderr_path = "/dev/null") {
  const std::string cmd = "cd '" + cwd + "' && '" + std::string(SEPBN_CLI_PATH) + "' " +
                          args + " 2>" + stderr_path;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  CliResult result;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) {
    result.out.append(buf, got);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

inline std::string fixture(const std::string& name) {
  return std::string(SEPBN_FIXTURE_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testsupport
