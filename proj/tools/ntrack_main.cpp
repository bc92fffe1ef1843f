#include "ntrack/cli.hpp"

int main(int argc, char** argv) { return ntrack::run_cli(argc, argv); }
