#include "aggr/cli.hpp"

int main(int argc, char** argv) { return aggr::run_cli(argc, argv); }
