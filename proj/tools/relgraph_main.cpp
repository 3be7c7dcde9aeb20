#include <iostream>

#include "relgraph/cli.hpp"

int main(int argc, char** argv) {
  return relgraph::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
