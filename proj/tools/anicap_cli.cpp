#include "anicap/cli.hpp"

int main(int argc, char** argv) { return anicap::run_cli(argc, argv); }
