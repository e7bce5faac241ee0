#include <iostream>
#include <string>
#include <vector>

#include "cntsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cntsim::dispatch(args, std::cout, std::cerr);
}
