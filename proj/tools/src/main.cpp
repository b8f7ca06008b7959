#include "adapitch/cli.hpp"

int main(int argc, char** argv) { return adapitch::run_cli(argc, argv); }
