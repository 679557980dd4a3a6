#include "pro/cli/commands.hpp"

int main(int argc, char** argv) { return pro::cli::run_cli(argc, argv); }
