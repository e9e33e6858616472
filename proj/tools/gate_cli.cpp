#include "gate/cli_io.hpp"

int main(int argc, char** argv) { return gate::io::cli_main(argc, argv); }
