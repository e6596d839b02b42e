#include "ollga/cli.hpp"

int main(int argc, char** argv) { return ollga::cli_main(argc, argv); }
