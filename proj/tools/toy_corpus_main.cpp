#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "toy_corpus.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes a small synthetic fg/alpha/bg corpus"};
  std::string out;
  std::size_t num_fg = 5, num_bg = 5, size = 64;
  std::uint64_t seed = 0;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--fg", num_fg, "Number of foregrounds");
  app.add_option("--bg", num_bg, "Number of backgrounds");
  app.add_option("--size", size, "Foreground side length");
  app.add_option("--seed", seed, "Random seed");
  CLI11_PARSE(app, argc, argv);
  try {
    mf::toy::write_toy_corpus(out, num_fg, num_bg, size, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
