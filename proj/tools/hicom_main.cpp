#include "hicom/cli.hpp"

int main(int argc, char** argv) { return hicom::cli_dispatch(argc, argv); }
