#include <cstdio>

int main() {
    std::puts("mkg4d: CLI under construction");
    return 0;
}
