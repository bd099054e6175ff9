#include <string>
#include <vector>

#include "qdband/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qdband::cli::run(std::move(args));
}
