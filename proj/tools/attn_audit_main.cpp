#include <iostream>
#include <string>
#include <vector>

#include "attn_audit/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return attn_audit::run_cli(args, std::cout, std::cerr);
}
