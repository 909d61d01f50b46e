#include <iostream>
#include <string>
#include <vector>

#include "segreward/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return segreward::cli::run(args, std::cout, std::cerr);
}
