#include <iostream>

#include "ppgbp/cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ppgbp::cli::run(std::move(args), std::cout, std::cerr);
}
