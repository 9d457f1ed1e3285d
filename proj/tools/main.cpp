#include "narrowlab/cli.hpp"

int main(int argc, char** argv) { return narrowlab::parse_and_dispatch(argc, argv); }
