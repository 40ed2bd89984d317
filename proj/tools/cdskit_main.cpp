#include <iostream>

#include "cdskit/app/commands.hpp"

int main(int argc, char** argv)
{
    return cdskit::app::run_cli(argc, argv, std::cout, std::cerr);
}
