#include "panrec/cli.hpp"

int main(int argc, char** argv) { return panrec::cli_main(argc, argv); }
