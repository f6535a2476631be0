#include <cstdio>

int main() {
  std::fprintf(stderr, "symsat: no subcommands wired yet\n");
  return 1;
}
