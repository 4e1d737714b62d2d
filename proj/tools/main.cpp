#include "regraph/cli.hpp"

int main(int argc, char** argv) { return regraph::run_cli(argc, argv); }
