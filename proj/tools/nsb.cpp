#include "nsb/harness.hpp"

int main(int argc, char** argv) { return nsb::harness::cli_main(argc, argv); }
