#include "zstyle/cli.hpp"

int main(int argc, char** argv) { return zstyle::cli::main_entry(argc, argv); }
