#include <iostream>
#include <string>
#include <vector>

#include "blr/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return blr::cli::run(args, std::cout, std::cerr);
}
