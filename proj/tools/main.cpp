#include "tvlab/io.hpp"

int main(int argc, char** argv) { return tvlab::cli_dispatch(argc, argv); }
