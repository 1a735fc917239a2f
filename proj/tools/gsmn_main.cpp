#include <cstdio>

int main() {
  std::puts("gsmn: placeholder");
  return 0;
}
