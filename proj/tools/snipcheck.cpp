#include "snipcheck/ingest.hpp"

#include <cstdio>

int main() {
  std::puts("snipcheck: CLI under construction");
  return 0;
}
