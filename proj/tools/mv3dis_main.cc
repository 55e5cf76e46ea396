#include <cstdio>
int main() { std::puts("mv3dis placeholder"); return 0; }
