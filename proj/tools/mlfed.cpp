// placeholder; full CLI lands with the experiment layer
#include <iostream>

int main() {
    std::cout << "mlfed CLI\n";
    return 0;
}
