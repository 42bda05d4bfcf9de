#include "rwre/harness.hpp"

int main(int argc, char** argv) { return rwre::harness::run_cli(argc, argv); }
