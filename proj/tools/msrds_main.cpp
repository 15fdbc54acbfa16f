#include "msrds/cli/commands.hpp"

int main(int argc, char** argv) { return msrds::cli::run_cli(argc, argv); }
