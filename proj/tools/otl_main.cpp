#include "otl/cli.hpp"

int main(int argc, char** argv) { return otl::run_cli(argc, argv); }
