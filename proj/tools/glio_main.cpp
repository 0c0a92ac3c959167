#include <string>
#include <vector>

#include "glio/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return glio::cli::run_command(args);
}
