#include "painter/cli.hpp"

int main(int argc, char** argv) { return painter::cli_main(argc, argv); }
