#include <iostream>

#include "stutterkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return stutterkit::cli::run(args, std::cout, std::cerr);
}
