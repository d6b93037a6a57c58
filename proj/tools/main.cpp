#include <string>
#include <vector>

#include "grpss/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return grpss::run_cli(args);
}
