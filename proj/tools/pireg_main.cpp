#include <iostream>
#include <string>
#include <vector>

#include "pireg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pireg::run_cli(args, std::cout, std::cerr);
}
