#include <iostream>

#include "rollnet/cli.hpp"

int main(int argc, char** argv) {
  rollnet::cli::GradientTamper tamper;
#ifdef ROLLNET_FAULTY_BACKWARD
  tamper = [](rollnet::GradientSet& g) { g[0] = g[0] * 1.01 + 1e-3; };
#endif
  return rollnet::cli::run(argc, argv, {std::cout, std::cerr}, tamper);
}
