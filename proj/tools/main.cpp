#include "sgtrkit/cli.hpp"

int main(int argc, char** argv) { return sgtrkit::cli::run_cli(argc, argv); }
