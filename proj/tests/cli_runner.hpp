#pragma once

// Runs the built command-line tool and captures its exit code and stdout.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace testing {

struct CliRun {
  int exit_code = -1;
  std::string out;
};

inline std::string data_file(const std::string& name) { return std::string(QCOMPAT_TEST_DATA) + "/" + name; }

inline CliRun run_cli(const std::string& args) {
  const std::string cmd = std::string(QCOMPAT_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  while (size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace testing
