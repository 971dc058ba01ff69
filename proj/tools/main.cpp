#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::cout << std::unitbuf;
  return rawdeg::cli::run({argv, argv + argc}, std::cout, std::cerr);
}
