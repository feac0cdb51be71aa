#include "ptip/cli.hpp"

int main(int argc, char** argv) { return ptip::run_command(argc, argv); }
