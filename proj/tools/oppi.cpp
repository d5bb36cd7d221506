#include <cstdlib>
#include <iostream>

#include "oppi/cli/app.hpp"

int main(int argc, char** argv) {
  const char* seed = std::getenv("OPPI_SEED");
  return oppi::cli::run(argc, argv, std::cout, std::cerr, seed ? seed : "");
}
