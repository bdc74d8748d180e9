#include "prstl/cli.hpp"

int main(int argc, char** argv) { return prstl::run_cli(argc, argv); }
