#include "matforge/service/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return matforge::service::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
