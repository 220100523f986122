#include "ac/cli.hpp"

int main(int argc, char** argv) { return ac::cli_main(argc, argv); }
