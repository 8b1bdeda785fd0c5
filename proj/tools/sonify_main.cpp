#include <iostream>
#include <string>
#include <vector>

#include "sonify/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return sonify::cli::run(args, std::cout, std::cerr);
}
