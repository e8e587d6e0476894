// Command-line front end (wired up after the compute modules).
#include <cstdio>

int main() {
  std::puts("fpo: command-line interface not yet wired");
  return 2;
}
