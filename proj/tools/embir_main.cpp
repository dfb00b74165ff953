#include <iostream>
#include <string>
#include <vector>

#include "embir/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return embir::cli::run(args, std::cout, std::cerr);
}
