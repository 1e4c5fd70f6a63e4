#include <iostream>
#include <string>
#include <vector>

#include "seqkernel/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return seqkernel::cli::run(args, std::cout, std::cerr);
}
