#include <malloc.h>

#include <iostream>
#include <string>
#include <vector>

#include "aat/cli.hpp"

int main(int argc, char** argv) {
  // Serve tensor buffers from the heap, not fresh mmaps.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  std::vector<std::string> args(argv + 1, argv + argc);
  return aat::run_cli(args, std::cout, std::cerr);
}
