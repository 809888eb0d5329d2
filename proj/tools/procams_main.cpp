#include "procams/cli.hpp"

int main(int argc, char** argv) { return procams::run_cli(argc, argv); }
