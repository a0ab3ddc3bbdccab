#include <iostream>

#include "tip_commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tip::cli::run_cli(args, std::cout, std::cerr);
}
