#include <iostream>

#include "ughc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ughc::cli::run(args, std::cout, std::cerr);
}
