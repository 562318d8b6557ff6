#include <iostream>

#include "ctqw/cli.hpp"
#include "ctqw/spectra.hpp"

int main(int argc, char** argv) {
  ctqw::reexec_if_blas_broken(argv);
  return ctqw::cli::run(argc, argv, std::cout, std::cerr);
}
